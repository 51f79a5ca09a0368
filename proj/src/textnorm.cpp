#include "aip/textnorm.hpp"

#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include "aip/error.hpp"

namespace aip::text {

namespace {

enum class CharClass { removed, space, keep };

bool is_punct_or_symbol(char32_t cp) {
    return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & (U_GC_P_MASK | U_GC_S_MASK)) != 0;
}

bool is_control_or_format(char32_t cp) {
    return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & (U_GC_CC_MASK | U_GC_CF_MASK)) != 0;
}

bool is_separator(char32_t cp) {
    return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & U_GC_Z_MASK) != 0 || u_isUWhiteSpace(static_cast<UChar32>(cp));
}

bool is_retained_sinhala(char32_t cp) { return is_sinhala_block(cp) && !is_punct_or_symbol(cp); }

char32_t fold_latin(char32_t cp) {
    UErrorCode status = U_ZERO_ERROR;
    if (uscript_getScript(static_cast<UChar32>(cp), &status) == USCRIPT_LATIN && U_SUCCESS(status)) {
        return static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
    }
    return cp;
}

}  // namespace

std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    const auto len = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < len) {
        UChar32 c;
        U8_NEXT(p, i, len, c);
        out.push_back(c < 0 ? char32_t{0xFFFD} : static_cast<char32_t>(c));
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(cp), error);
    if (error) {
        append_utf8(out, 0xFFFD);
        return;
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

bool is_valid_utf8(std::string_view s) {
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    const auto len = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < len) {
        UChar32 c;
        U8_NEXT(p, i, len, c);
        if (c < 0) return false;
    }
    return true;
}

std::size_t codepoint_count(std::string_view s) { return decode_utf8(s).size(); }

NormalizedText clean(std::string_view raw) {
    const auto cps = decode_utf8(raw);
    std::vector<char32_t> mapped;
    mapped.reserve(cps.size());

    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t cp = cps[i];
        if (cp == kZeroWidthJoiner) {
            const bool joins = i > 0 && i + 1 < cps.size() && is_retained_sinhala(cps[i - 1]) &&
                               is_retained_sinhala(cps[i + 1]);
            mapped.push_back(joins ? kZeroWidthJoiner : U' ');
        } else if (is_punct_or_symbol(cp)) {
            continue;
        } else if (is_control_or_format(cp) || is_separator(cp)) {
            mapped.push_back(U' ');
        } else {
            mapped.push_back(fold_latin(cp));
        }
    }

    NormalizedText out;
    std::string current;
    for (char32_t cp : mapped) {
        if (cp == U' ') {
            if (!current.empty()) {
                out.tokens.push_back(std::move(current));
                current.clear();
            }
        } else {
            append_utf8(current, cp);
        }
    }
    if (!current.empty()) out.tokens.push_back(std::move(current));

    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
        if (i) out.text.push_back(' ');
        out.text += out.tokens[i];
    }
    return out;
}

std::vector<std::string> word_tokens(const NormalizedText& t) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    const std::string& s = t.text;
    if (s.empty()) return tokens;
    while (true) {
        std::size_t sp = s.find(' ', start);
        tokens.emplace_back(s.substr(start, sp == std::string::npos ? std::string::npos : sp - start));
        if (sp == std::string::npos) break;
        start = sp + 1;
    }
    return tokens;
}

NgramCounts char_ngrams(std::string_view cleaned_text, int n) {
    if (n <= 0) fail(ErrorCode::contract, "char_ngrams: n must be >= 1");
    const auto cps = decode_utf8(cleaned_text);
    NgramCounts counts;
    const auto width = static_cast<std::size_t>(n);
    if (cps.size() < width) return counts;
    for (std::size_t i = 0; i + width <= cps.size(); ++i) {
        std::string gram;
        for (std::size_t k = 0; k < width; ++k) append_utf8(gram, cps[i + k]);
        ++counts[gram];
    }
    return counts;
}

NgramCounts char_ngrams(const NormalizedText& t, int n) { return char_ngrams(t.text, n); }

}  // namespace aip::text
