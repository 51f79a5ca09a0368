#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aip/textnorm.hpp"

namespace aip::backend {
class Client;
}

namespace aip::sim {

inline constexpr std::size_t kDefaultLeadSentences = 3;

// Verbatim prefix of `text` ending after the k-th sentence terminator
// ('.', U+0964 '।', U+0DF4 '෴', or newline); runs of terminators close one sentence.
// Returns the trimmed input when it has k or fewer sentences.
std::string lead_sentences(std::string_view text, std::size_t k);

enum class SummarizerKind { backend, native };

struct Summary {
    std::string text;
    SummarizerKind summarizer = SummarizerKind::native;
    std::vector<std::string> flags;
};

struct SummarizeOptions {
    std::size_t lead_sentences = kDefaultLeadSentences;
    bool allow_native_fallback = true;
};

// With a client, asks the backend; otherwise (or on backend unavailability,
// when fallback is allowed) uses lead_sentences.
Summary summarize(backend::Client* client, std::string_view transcript_text, const SummarizeOptions& options = {});

struct TermVector {
    std::vector<std::string> vocabulary;  // sorted, unique
    std::vector<double> weights;
};

std::pair<TermVector, TermVector> vectorize_pair(const text::NormalizedText& a, const text::NormalizedText& b);

struct DistanceReport {
    double euclidean = 0.0;
    double squared_euclidean = 0.0;
    double manhattan = 0.0;
    double chessboard = 0.0;
    double bray_curtis = 0.0;
    double canberra = 0.0;
};

DistanceReport distances(const TermVector& a, const TermVector& b);
DistanceReport distances(const std::vector<double>& x, const std::vector<double>& y);

enum class Method { euclidean, squared_euclidean, manhattan, chessboard, bray_curtis, canberra };

inline constexpr std::array<Method, 6> kAllMethods = {Method::euclidean,  Method::squared_euclidean,
                                                      Method::manhattan,  Method::chessboard,
                                                      Method::bray_curtis, Method::canberra};

std::string_view to_string(Method m);
// Throws Error{config} for unknown names.
Method parse_method(std::string_view name);
double pick(const DistanceReport& report, Method m);

// bray_curtis: 1 - d; every other method: 1 / (1 + d); clamped to [0, 1].
// Token counts are accepted for interface stability and currently unused.
double similarity_score(const DistanceReport& report, Method method, std::size_t title_tokens = 0,
                        std::size_t summary_tokens = 0);

// Reference side of the comparison: title repeated `title_weight` times,
// then the description `description_weight` times, space separated.
struct TextWeights {
    unsigned title = 2;
    unsigned description = 1;
};
std::string compose_reference(std::string_view title, std::string_view description, TextWeights weights = {});

}  // namespace aip::sim
