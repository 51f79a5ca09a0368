#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aip::text {

// Cleaned text; `tokens` joined with single spaces reproduces `text`.
struct NormalizedText {
    std::string text;
    std::vector<std::string> tokens;
};

// Removes punctuation (P*) and symbols (S*); keeps U+200D only between two
// retained Sinhala-block characters; other control/format characters and all
// whitespace become single spaces; trims; lowercases Latin letters. Sinhala
// letters, marks and digits pass through. Ill-formed UTF-8 sequences are
// treated as U+FFFD (a symbol) and dropped.
NormalizedText clean(std::string_view raw);

std::vector<std::string> word_tokens(const NormalizedText& t);

// Sliding window of n code points over the cleaned text, spaces included.
// Ordered so iteration is canonical.
using NgramCounts = std::map<std::string, std::size_t>;
NgramCounts char_ngrams(const NormalizedText& t, int n);
NgramCounts char_ngrams(std::string_view cleaned_text, int n);

bool is_valid_utf8(std::string_view s);
std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(const std::vector<char32_t>& cps);
void append_utf8(std::string& out, char32_t cp);
std::size_t codepoint_count(std::string_view s);

inline constexpr char32_t kZeroWidthJoiner = 0x200D;
inline bool is_sinhala_block(char32_t cp) { return cp >= 0x0D80 && cp <= 0x0DFF; }

}  // namespace aip::text
