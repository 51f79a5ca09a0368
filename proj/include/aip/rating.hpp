#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace aip::rating {

enum class Verdict { trustworthy, caution, misleading_or_hateful };

std::string_view to_string(Verdict v);

struct Weights {
    double hate = 0.5;
    double similarity = 0.5;
};

struct Thresholds {
    int trustworthy = 70;  // overall >= this
    int caution = 40;      // overall >= this
};

struct Rating {
    double hate_prob = 0.0;
    double similarity = 0.0;
    int overall = 0;
    Verdict verdict = Verdict::caution;
    Weights weights;
    Thresholds thresholds;
    std::vector<std::string> flags;
};

// overall = round(100 * (w_h * (1 - hate_prob) + w_s * similarity)).
// Inputs must lie in [0, 1]; weights non-negative and summing to 1 within 1e-9.
Rating compute_rating(double hate_prob, double similarity, Weights weights = {}, Thresholds thresholds = {},
                      std::vector<std::string> flags = {});

Verdict classify_overall(int overall, Thresholds thresholds = {});

// "W_H,W_S" as given on the command line.
Weights parse_weights(std::string_view text);

}  // namespace aip::rating
