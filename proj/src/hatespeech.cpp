#include "aip/hatespeech.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aip/backend_protocol.hpp"
#include "aip/error.hpp"
#include "aip/textnorm.hpp"

namespace aip::hate {

namespace {

using nlohmann::json;

constexpr std::string_view kModelFormat = "aip.trigram_nb";
constexpr int kModelVersion = 1;

// Rejection sampling keeps the draw unbiased and independent of the
// standard library's distribution implementations.
std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % bound + 1) % bound;
    std::uint64_t r;
    do {
        r = gen();
    } while (r > limit);
    return r % bound;
}

// Numerically stable two-class softmax.
double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto where = "corpus line " + std::to_string(line_no);
        auto tab = line.find('\t');
        if (tab == std::string::npos) fail(ErrorCode::parse, where + ": expected label<TAB>text");
        std::string_view label(line.data(), tab);
        if (label != "0" && label != "1") {
            fail(ErrorCode::parse, where + ": label must be 0 or 1, got '" + std::string(label) + "'");
        }
        std::string_view raw(line.data() + tab + 1, line.size() - tab - 1);
        if (!text::is_valid_utf8(raw)) fail(ErrorCode::parse, where + ": invalid UTF-8");
        auto cleaned = text::clean(raw);
        if (cleaned.text.empty()) {
            ++corpus.dropped_empty;
            continue;
        }
        corpus.examples.push_back({std::move(cleaned.text), label == "1" ? 1 : 0});
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::not_found, "cannot open corpus " + path.string());
    return parse_corpus(in);
}

CorpusSplit split(std::span<const LabeledExample> corpus, std::uint64_t seed) {
    if (corpus.size() < 10) {
        fail(ErrorCode::contract, "split: need at least 10 examples, got " + std::to_string(corpus.size()));
    }
    std::vector<LabeledExample> shuffled(corpus.begin(), corpus.end());
    std::mt19937_64 gen(seed);
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
        auto j = static_cast<std::size_t>(uniform_below(gen, i + 1));
        std::swap(shuffled[i], shuffled[j]);
    }

    const std::size_t n = shuffled.size();
    const std::size_t n_val = n / 10;
    const std::size_t n_test = n / 10;
    const std::size_t n_train = n - n_val - n_test;

    CorpusSplit out;
    out.seed = seed;
    auto begin = shuffled.begin();
    out.train.assign(begin, begin + static_cast<std::ptrdiff_t>(n_train));
    out.validation.assign(begin + static_cast<std::ptrdiff_t>(n_train),
                          begin + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.assign(begin + static_cast<std::ptrdiff_t>(n_train + n_val), shuffled.end());
    return out;
}

void TrigramNBModel::rebuild_vocabulary_size() {
    std::set<std::string_view> vocab;
    for (const auto& c : classes_) {
        for (const auto& [gram, n] : c.counts) vocab.insert(gram);
    }
    vocabulary_size_ = vocab.size();
}

double TrigramNBModel::class_log_prior(int label) const {
    const double docs = static_cast<double>(classes_[0].documents + classes_[1].documents);
    return std::log(static_cast<double>(stats(label).documents) / docs);
}

double TrigramNBModel::trigram_log_likelihood(int label, std::string_view trigram) const {
    const auto& c = stats(label);
    auto it = c.counts.find(std::string(trigram));
    const double count = it == c.counts.end() ? 0.0 : static_cast<double>(it->second);
    const double denom = static_cast<double>(c.total) + alpha_ * static_cast<double>(vocabulary_size_);
    return std::log((count + alpha_) / denom);
}

TrigramNBModel::Scores TrigramNBModel::score(std::string_view raw_text) const {
    Scores s;
    auto grams = text::char_ngrams(text::clean(raw_text), kTrigram);
    for (int label : {0, 1}) {
        double total = class_log_prior(label);
        for (const auto& [gram, n] : grams) total += static_cast<double>(n) * trigram_log_likelihood(label, gram);
        s.log_joint[static_cast<std::size_t>(label)] = total;
    }
    s.prior_only = grams.empty();
    s.prob_hate = logistic(s.log_joint[1] - s.log_joint[0]);
    return s;
}

std::string TrigramNBModel::to_json() const {
    json classes = json::array();
    for (std::size_t label = 0; label < classes_.size(); ++label) {
        const auto& c = classes_[label];
        classes.push_back({{"label", label},
                           {"documents", c.documents},
                           {"trigram_total", c.total},
                           {"counts", c.counts}});
    }
    json doc = {{"format", kModelFormat}, {"version", kModelVersion}, {"alpha", alpha_},
                {"seed", seed_},          {"ngram", kTrigram},         {"classes", classes}};
    return doc.dump() + "\n";
}

TrigramNBModel TrigramNBModel::from_json(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::parse, std::string("nb model: malformed JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != kModelFormat) fail(ErrorCode::parse, "nb model: unknown format");
        if (doc.at("version").get<int>() != kModelVersion) fail(ErrorCode::parse, "nb model: unsupported version");
        if (doc.at("ngram").get<int>() != kTrigram) fail(ErrorCode::parse, "nb model: only trigram models supported");

        TrigramNBModel m;
        m.alpha_ = doc.at("alpha").get<double>();
        if (!(m.alpha_ > 0.0)) fail(ErrorCode::parse, "nb model: alpha must be positive");
        m.seed_ = doc.at("seed").get<std::uint64_t>();
        const auto& classes = doc.at("classes");
        if (!classes.is_array() || classes.size() != 2) fail(ErrorCode::parse, "nb model: expected two classes");
        for (std::size_t label = 0; label < 2; ++label) {
            const auto& c = classes[label];
            if (c.at("label").get<std::size_t>() != label) fail(ErrorCode::parse, "nb model: classes out of order");
            auto& stats = m.classes_[label];
            stats.documents = c.at("documents").get<std::size_t>();
            stats.total = c.at("trigram_total").get<std::size_t>();
            stats.counts = c.at("counts").get<std::map<std::string, std::size_t>>();
            std::size_t sum = 0;
            for (const auto& [gram, n] : stats.counts) sum += n;
            if (sum != stats.total) fail(ErrorCode::parse, "nb model: trigram_total does not match counts");
            if (stats.documents == 0) fail(ErrorCode::parse, "nb model: class without documents");
        }
        m.rebuild_vocabulary_size();
        return m;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("nb model: ") + e.what());
    }
}

void TrigramNBModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out << to_json();
}

TrigramNBModel TrigramNBModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::not_found, "cannot open model " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

TrigramNBModel train_nb(std::span<const LabeledExample> train, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::contract, "train_nb: alpha must be positive");
    TrigramNBModel m;
    m.alpha_ = alpha;
    for (const auto& ex : train) {
        if (ex.label != 0 && ex.label != 1) fail(ErrorCode::contract, "train_nb: label must be 0 or 1");
        auto& c = m.classes_[static_cast<std::size_t>(ex.label)];
        ++c.documents;
        for (const auto& [gram, n] : text::char_ngrams(ex.text, kTrigram)) {
            c.counts[gram] += n;
            c.total += n;
        }
    }
    if (m.classes_[0].documents == 0 || m.classes_[1].documents == 0) {
        fail(ErrorCode::degenerate_corpus, "train_nb: training data must contain both labels");
    }
    m.rebuild_vocabulary_size();
    return m;
}

Prediction predict(const TrigramNBModel& model, std::string_view text, double threshold) {
    auto s = model.score(text);
    return {s.prob_hate >= threshold ? 1 : 0, s.prob_hate, s.prior_only};
}

Prediction classify_external(backend::Client& client, std::string_view text) {
    auto resp = client.call(backend::Op::classify, backend::TextPayload{std::string(text)});
    if (!resp.ok) fail(ErrorCode::backend_unavailable, "classifier backend refused: " + resp.error);
    const auto& r = std::get<backend::ClassifyResult>(resp.result);
    return {r.label, r.prob, false};
}

double f1_from(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

ClassificationReport evaluate(std::span<const int> predictions, std::span<const int> golds) {
    if (predictions.size() != golds.size()) fail(ErrorCode::contract, "evaluate: length mismatch");
    if (golds.empty()) fail(ErrorCode::contract, "evaluate: empty evaluation set");

    ClassificationReport r;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const int p = predictions[i], g = golds[i];
        if ((p != 0 && p != 1) || (g != 0 && g != 1)) fail(ErrorCode::contract, "evaluate: labels must be 0 or 1");
        if (p == 1 && g == 1) ++r.tp;
        else if (p == 0 && g == 0) ++r.tn;
        else if (p == 1) ++r.fp;
        else ++r.fn;
    }
    const auto d = [](std::size_t v) { return static_cast<double>(v); };
    r.accuracy = d(r.tp + r.tn) / d(r.total());
    if (r.tp + r.fp == 0) {
        r.flags.push_back("undefined_metric:precision");
    } else {
        r.precision = d(r.tp) / d(r.tp + r.fp);
    }
    if (r.tp + r.fn == 0) {
        r.flags.push_back("undefined_metric:recall");
    } else {
        r.recall = d(r.tp) / d(r.tp + r.fn);
    }
    if (r.tp == 0) {
        r.flags.push_back("undefined_metric:f1");
    } else {
        r.f1 = 2.0 * d(r.tp) / d(2 * r.tp + r.fp + r.fn);
    }
    return r;
}

double majority_baseline(std::span<const int> golds) {
    if (golds.empty()) return 0.0;
    const auto ones = static_cast<std::size_t>(std::count(golds.begin(), golds.end(), 1));
    return static_cast<double>(std::max(ones, golds.size() - ones)) / static_cast<double>(golds.size());
}

}  // namespace aip::hate
