#include "aip/rating.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "aip/error.hpp"

namespace aip::rating {

namespace {

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::trustworthy: return "trustworthy";
        case Verdict::caution: return "caution";
        case Verdict::misleading_or_hateful: return "misleading_or_hateful";
    }
    return "?";
}

Verdict classify_overall(int overall, Thresholds thresholds) {
    if (overall >= thresholds.trustworthy) return Verdict::trustworthy;
    if (overall >= thresholds.caution) return Verdict::caution;
    return Verdict::misleading_or_hateful;
}

Rating compute_rating(double hate_prob, double similarity, Weights weights, Thresholds thresholds,
                      std::vector<std::string> flags) {
    if (!in_unit_interval(hate_prob)) fail(ErrorCode::contract, "compute_rating: hate_prob outside [0,1]");
    if (!in_unit_interval(similarity)) fail(ErrorCode::contract, "compute_rating: similarity outside [0,1]");
    if (!(weights.hate >= 0.0) || !(weights.similarity >= 0.0) ||
        std::abs(weights.hate + weights.similarity - 1.0) > 1e-9) {
        fail(ErrorCode::contract, "compute_rating: weights must be non-negative and sum to 1");
    }

    Rating r;
    r.hate_prob = hate_prob;
    r.similarity = similarity;
    r.weights = weights;
    r.thresholds = thresholds;
    r.flags = std::move(flags);
    const double blend = weights.hate * (1.0 - hate_prob) + weights.similarity * similarity;
    // nudge so an exact .5 that binary arithmetic lands just below still rounds up
    r.overall = static_cast<int>(std::lround(std::clamp(100.0 * blend + 1e-9, 0.0, 100.0)));
    r.verdict = classify_overall(r.overall, thresholds);
    return r;
}

Weights parse_weights(std::string_view text) {
    auto comma = text.find(',');
    if (comma == std::string_view::npos) fail(ErrorCode::config, "weights must be given as W_H,W_S");
    auto parse = [&](std::string_view s) {
        double v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail(ErrorCode::config, "weights: cannot parse '" + std::string(s) + "'");
        }
        return v;
    };
    Weights w{parse(text.substr(0, comma)), parse(text.substr(comma + 1))};
    if (w.hate < 0 || w.similarity < 0 || std::abs(w.hate + w.similarity - 1.0) > 1e-9) {
        fail(ErrorCode::config, "weights must be non-negative and sum to 1");
    }
    return w;
}

}  // namespace aip::rating
