#include "aip/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "aip/backend_protocol.hpp"
#include "aip/error.hpp"

namespace aip::sim {

namespace {

constexpr std::string_view kDanda = "\xE0\xA5\xA4";        // U+0964
constexpr std::string_view kKunddaliya = "\xE0\xB7\xB4";  // U+0DF4

// Byte length of a sentence terminator starting at `at`, or 0.
std::size_t terminator_at(std::string_view s, std::size_t at) {
    if (s[at] == '.' || s[at] == '\n') return 1;
    if (s.substr(at, kDanda.size()) == kDanda) return kDanda.size();
    if (s.substr(at, kKunddaliya.size()) == kKunddaliya) return kKunddaliya.size();
    return 0;
}

std::string_view trim(std::string_view s) {
    auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && blank(s.front())) s.remove_prefix(1);
    while (!s.empty() && blank(s.back())) s.remove_suffix(1);
    return s;
}

std::map<std::string, double> count_tokens(const text::NormalizedText& t) {
    std::map<std::string, double> counts;
    for (const auto& tok : t.tokens) counts[tok] += 1.0;
    return counts;
}

}  // namespace

std::string lead_sentences(std::string_view input, std::size_t k) {
    if (k == 0) return {};
    std::size_t sentences = 0;
    bool has_content = false;
    std::size_t pos = 0;
    while (pos < input.size()) {
        std::size_t len = terminator_at(input, pos);
        if (len == 0) {
            const char c = input[pos];
            if (c != ' ' && c != '\t' && c != '\r') has_content = true;
            ++pos;
            continue;
        }
        std::size_t end = pos + len;
        if (!has_content) {
            pos = end;
            continue;
        }
        while (end < input.size()) {
            std::size_t more = terminator_at(input, end);
            if (more == 0) break;
            end += more;
        }
        if (++sentences == k) return std::string(trim(input.substr(0, end)));
        has_content = false;
        pos = end;
    }
    return std::string(trim(input));
}

Summary summarize(backend::Client* client, std::string_view transcript_text, const SummarizeOptions& options) {
    Summary out;
    if (trim(transcript_text).empty()) {
        out.summarizer = client ? SummarizerKind::backend : SummarizerKind::native;
        out.flags.push_back("empty_transcript");
        return out;
    }
    if (client) {
        try {
            auto resp = client->call(backend::Op::summarize, backend::TextPayload{std::string(transcript_text)});
            if (resp.ok) {
                out.text = std::get<backend::TextResult>(resp.result).text;
                out.summarizer = SummarizerKind::backend;
                return out;
            }
            if (!options.allow_native_fallback) {
                fail(ErrorCode::backend_unavailable, "summarizer backend refused: " + resp.error);
            }
            out.flags.push_back("summarizer_backend_error: " + resp.error);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::backend_unavailable || !options.allow_native_fallback) throw;
            out.flags.push_back("summarizer_backend_unavailable");
        }
    } else if (!options.allow_native_fallback) {
        fail(ErrorCode::backend_unavailable, "no summarizer backend configured and native fallback disabled");
    }
    out.text = lead_sentences(transcript_text, options.lead_sentences);
    out.summarizer = SummarizerKind::native;
    out.flags.push_back("native_summarizer");
    return out;
}

std::pair<TermVector, TermVector> vectorize_pair(const text::NormalizedText& a, const text::NormalizedText& b) {
    auto ca = count_tokens(a);
    auto cb = count_tokens(b);
    std::map<std::string, std::pair<double, double>> merged;
    for (const auto& [tok, n] : ca) merged[tok].first = n;
    for (const auto& [tok, n] : cb) merged[tok].second = n;

    TermVector va, vb;
    va.vocabulary.reserve(merged.size());
    for (const auto& [tok, counts] : merged) {
        va.vocabulary.push_back(tok);
        va.weights.push_back(counts.first);
        vb.weights.push_back(counts.second);
    }
    vb.vocabulary = va.vocabulary;
    return {std::move(va), std::move(vb)};
}

DistanceReport distances(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) fail(ErrorCode::contract, "distances: vectors differ in length");
    DistanceReport r;
    double sum_abs = 0.0, sum_total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        const double ad = std::abs(diff);
        r.squared_euclidean += diff * diff;
        sum_abs += ad;
        r.chessboard = std::max(r.chessboard, ad);
        sum_total += x[i] + y[i];
        const double denom = std::abs(x[i]) + std::abs(y[i]);
        if (denom > 0.0) r.canberra += ad / denom;
    }
    r.manhattan = sum_abs;
    r.euclidean = std::sqrt(r.squared_euclidean);
    r.bray_curtis = sum_total > 0.0 ? sum_abs / sum_total : 0.0;
    return r;
}

DistanceReport distances(const TermVector& a, const TermVector& b) {
    if (a.vocabulary != b.vocabulary) fail(ErrorCode::contract, "distances: term vectors use different vocabularies");
    if (a.weights.size() != a.vocabulary.size() || b.weights.size() != b.vocabulary.size()) {
        fail(ErrorCode::contract, "distances: weights do not match vocabulary size");
    }
    return distances(a.weights, b.weights);
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::euclidean: return "euclidean";
        case Method::squared_euclidean: return "squared_euclidean";
        case Method::manhattan: return "manhattan";
        case Method::chessboard: return "chessboard";
        case Method::bray_curtis: return "bray_curtis";
        case Method::canberra: return "canberra";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : kAllMethods) {
        if (to_string(m) == name) return m;
    }
    fail(ErrorCode::config, "unknown similarity method '" + std::string(name) + "'");
}

double pick(const DistanceReport& r, Method m) {
    switch (m) {
        case Method::euclidean: return r.euclidean;
        case Method::squared_euclidean: return r.squared_euclidean;
        case Method::manhattan: return r.manhattan;
        case Method::chessboard: return r.chessboard;
        case Method::bray_curtis: return r.bray_curtis;
        case Method::canberra: return r.canberra;
    }
    return 0.0;
}

double similarity_score(const DistanceReport& report, Method method, std::size_t, std::size_t) {
    const double d = pick(report, method);
    const double score = method == Method::bray_curtis ? 1.0 - d : 1.0 / (1.0 + d);
    return std::clamp(score, 0.0, 1.0);
}

std::string compose_reference(std::string_view title, std::string_view description, TextWeights weights) {
    std::string out;
    auto append = [&](std::string_view part, unsigned times) {
        for (unsigned i = 0; i < times; ++i) {
            if (!out.empty()) out.push_back(' ');
            out.append(part);
        }
    };
    append(title, weights.title);
    append(description, weights.description);
    return out;
}

}  // namespace aip::sim
