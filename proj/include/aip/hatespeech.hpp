#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aip::backend {
class Client;
}

namespace aip::hate {

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr double kDefaultAlpha = 1.0;
inline constexpr double kDefaultThreshold = 0.5;
inline constexpr int kTrigram = 3;

struct LabeledExample {
    std::string text;  // already cleaned
    int label = 0;     // 1 = hate

    bool operator==(const LabeledExample&) const = default;
};

struct Corpus {
    std::vector<LabeledExample> examples;
    std::size_t dropped_empty = 0;
};

// `label<TAB>text` per line. Texts are cleaned; lines that clean to nothing
// are dropped and counted. Bad labels throw Error{parse} with the line number.
Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);

struct CorpusSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
    std::vector<LabeledExample> test;
    std::uint64_t seed = kDefaultSeed;
};

// Seeded Fisher-Yates over the corpus, then floor(10%) validation,
// floor(10%) test, remainder train. Needs at least 10 examples.
CorpusSplit split(std::span<const LabeledExample> corpus, std::uint64_t seed = kDefaultSeed);

// Multinomial naive Bayes over character trigrams. Counts are the source of
// truth; log-probabilities are derived from them on demand.
class TrigramNBModel {
public:
    struct ClassStats {
        std::size_t documents = 0;
        std::size_t total = 0;  // trigram occurrences
        std::map<std::string, std::size_t> counts;

        bool operator==(const ClassStats&) const = default;
    };

    TrigramNBModel() = default;

    double alpha() const { return alpha_; }
    std::uint64_t seed() const { return seed_; }
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    std::size_t vocabulary_size() const { return vocabulary_size_; }
    const ClassStats& stats(int label) const { return classes_.at(static_cast<std::size_t>(label)); }

    double class_log_prior(int label) const;
    // log((count + alpha) / (total + alpha * V)); unseen trigrams get count 0.
    double trigram_log_likelihood(int label, std::string_view trigram) const;

    struct Scores {
        std::array<double, 2> log_joint{};
        double prob_hate = 0.5;
        bool prior_only = false;
    };
    Scores score(std::string_view raw_text) const;

    bool operator==(const TrigramNBModel&) const = default;

    // JSON document; see README for the schema.
    std::string to_json() const;
    static TrigramNBModel from_json(std::string_view document);
    void save(const std::filesystem::path& path) const;
    static TrigramNBModel load(const std::filesystem::path& path);

private:
    friend TrigramNBModel train_nb(std::span<const LabeledExample>, double);
    void rebuild_vocabulary_size();

    double alpha_ = kDefaultAlpha;
    std::uint64_t seed_ = kDefaultSeed;
    std::array<ClassStats, 2> classes_{};
    std::size_t vocabulary_size_ = 0;
};

// Throws Error{degenerate_corpus} unless both labels occur, Error{contract}
// unless alpha > 0.
TrigramNBModel train_nb(std::span<const LabeledExample> train, double alpha = kDefaultAlpha);

struct Prediction {
    int label = 0;
    double prob_hate = 0.5;
    bool prior_only = false;
};

// label = 1 iff prob_hate >= threshold.
Prediction predict(const TrigramNBModel& model, std::string_view text, double threshold = kDefaultThreshold);

// Delegates to the classifier backend; the response is schema-checked by
// the protocol layer and returned as-is.
Prediction classify_external(backend::Client& client, std::string_view text);

struct ClassificationReport {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
    std::vector<std::string> flags;  // undefined_metric:<precision|recall|f1>

    std::size_t total() const { return tp + tn + fp + fn; }
};

ClassificationReport evaluate(std::span<const int> predictions, std::span<const int> golds);

// Harmonic mean; 0 when both are 0.
double f1_from(double precision, double recall);

// Fraction of the majority label in `golds`.
double majority_baseline(std::span<const int> golds);

}  // namespace aip::hate
