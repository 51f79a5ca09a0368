#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "aip/asr.hpp"
#include "aip/audio_dsp.hpp"
#include "aip/pipeline.hpp"
#include "aip/textnorm.hpp"

namespace aip::pipeline {

namespace {

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) fail(ErrorCode::io, "cannot write " + out_path);
    file << text;
}

std::optional<std::string> default_backend() {
    if (const char* env = std::getenv("AIP_BACKEND"); env && *env) return std::string(env);
    return std::nullopt;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::not_found, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Audio content-integrity pipeline: transcribe, detect hate speech, compare with the title, rate."};
    app.require_subcommand(1);

    // rate
    auto* rate = app.add_subcommand("rate", "Run the full pipeline on one video and print a JSON report");
    std::string video_id;
    std::string fixtures = "fixtures/videos";
    std::string backend_addr;
    std::string hate_engine = "auto";
    std::string nb_model;
    std::string method = "bray_curtis";
    std::string weights = "0.5,0.5";
    std::string text_weights = "2,1";
    std::uint64_t seed = hate::kDefaultSeed;
    std::size_t max_in_flight = backend::kDefaultMaxInFlight;
    std::string out_path;
    std::string dump_mel;
    bool pretty = false;
    rate->add_option("video_id", video_id, "Video identifier")->required();
    rate->add_option("--fixtures", fixtures, "Fixture directory with <id>.json and <id>.wav");
    rate->add_option("--backend", backend_addr, "HOST:PORT, stdio:CMD or stub[:label=L,prob=P,...] (default $AIP_BACKEND)");
    rate->add_option("--hate-engine", hate_engine, "nb | backend | auto")
        ->check(CLI::IsMember({"nb", "backend", "auto"}));
    rate->add_option("--nb-model", nb_model, "Trained naive Bayes model (JSON)");
    rate->add_option("--similarity-method", method, "euclidean | squared_euclidean | manhattan | chessboard | bray_curtis | canberra");
    rate->add_option("--weights", weights, "Rating weights W_H,W_S summing to 1");
    rate->add_option("--text-weights", text_weights, "Title,description repetition for the reference text");
    rate->add_option("--seed", seed, "Seed echoed into the report");
    rate->add_option("--max-in-flight", max_in_flight, "Concurrent backend requests per connection")
        ->check(CLI::PositiveNumber);
    rate->add_option("--out", out_path, "Write the report here instead of stdout");
    rate->add_option("--dump-mel", dump_mel, "Write per-chunk log-mel matrices to PREFIX.<chunk>.mel");
    rate->add_flag("--pretty", pretty, "Human-readable summary instead of JSON");

    // evaluate-wer
    auto* ewer = app.add_subcommand("evaluate-wer", "Corpus WER over reference<TAB>hypothesis pairs");
    std::string pairs_path;
    ewer->add_option("pairs", pairs_path, "TSV file")->required();
    ewer->add_option("--out", out_path, "Write the report here instead of stdout");

    // train-nb
    auto* train = app.add_subcommand("train-nb", "Train the character-trigram naive Bayes baseline");
    std::string corpus_path;
    double alpha = hate::kDefaultAlpha;
    std::string model_out;
    train->add_option("corpus", corpus_path, "label<TAB>text TSV")->required();
    train->add_option("--seed", seed, "Split seed");
    train->add_option("--alpha", alpha, "Laplace smoothing")->check(CLI::PositiveNumber);
    train->add_option("--model-out", model_out, "Where to save the model")->required();
    train->add_option("--out", out_path, "Write the report here instead of stdout");

    // classify
    auto* classify = app.add_subcommand("classify", "Classify one text");
    std::string text_arg;
    std::string text_file;
    auto* text_opt = classify->add_option("--text", text_arg, "Text to classify");
    auto* file_opt = classify->add_option("--file", text_file, "File holding the text");
    text_opt->excludes(file_opt);
    classify->add_option("--nb-model", nb_model, "Trained naive Bayes model");
    classify->add_option("--backend", backend_addr, "Classifier backend address (default $AIP_BACKEND)");

    // mel
    auto* mel = app.add_subcommand("mel", "Standardize, chunk and dump log-mel features of a WAV file");
    std::string wav_path;
    mel->add_option("wav", wav_path, "Input WAV")->required();
    mel->add_option("--out", out_path, "Output prefix; writes PREFIX.<chunk>.mel")->required();

    // stub-server
    auto* stub = app.add_subcommand("stub-server", "Serve the deterministic stub backend over stdin/stdout");
    std::string stub_spec = "stub";
    stub->add_option("--spec", stub_spec, "stub[:label=L,prob=P,fail=I|J,ops=...]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*rate) {
            RateOptions options;
            options.fixtures = fixtures;
            if (!backend_addr.empty()) {
                options.backend = backend_addr;
            } else {
                options.backend = default_backend();
            }
            options.hate_engine = hate_engine == "nb"        ? HateEngine::nb
                                  : hate_engine == "backend" ? HateEngine::backend
                                                             : HateEngine::automatic;
            if (!nb_model.empty()) options.nb_model = nb_model;
            options.method = sim::parse_method(method);
            options.weights = rating::parse_weights(weights);
            {
                auto comma = text_weights.find(',');
                if (comma == std::string::npos) fail(ErrorCode::config, "--text-weights must be T,D");
                try {
                    options.text_weights.title = static_cast<unsigned>(std::stoul(text_weights.substr(0, comma)));
                    options.text_weights.description = static_cast<unsigned>(std::stoul(text_weights.substr(comma + 1)));
                } catch (const std::exception&) {
                    fail(ErrorCode::config, "--text-weights must be two non-negative integers");
                }
            }
            options.seed = seed;
            options.max_in_flight = max_in_flight;
            if (!dump_mel.empty()) options.dump_mel_prefix = dump_mel;

            auto outcome = run_rate(video_id, options);
            std::string text = pretty ? render_pretty(outcome.report) : outcome.report.dump(2) + "\n";
            emit(text, out_path, out);
            if (outcome.failed_stage) {
                err << "error: stage '" << *outcome.failed_stage << "' failed: " << outcome.error_message << "\n";
            }
            return outcome.exit_code;
        }

        if (*ewer) {
            std::ifstream in(pairs_path, std::ios::binary);
            if (!in) fail(ErrorCode::not_found, "cannot open " + pairs_path);
            auto r = asr::evaluate_wer_tsv(in);
            Json report{{"s", r.total.substitutions},
                        {"d", r.total.deletions},
                        {"i", r.total.insertions},
                        {"n", r.total.reference_words},
                        {"wer", r.total.wer()},
                        {"pairs", r.pairs},
                        {"skipped_empty_reference", r.skipped_empty_reference},
                        {"averaging", "micro"},
                        {"tokenization", "cleaned whitespace tokens"}};
            emit(report.dump(2) + "\n", out_path, out);
            return 0;
        }

        if (*train) {
            auto corpus = hate::load_corpus(corpus_path);
            auto parts = hate::split(corpus.examples, seed);
            auto model = hate::train_nb(parts.train, alpha);
            model.set_seed(seed);
            model.save(model_out);

            std::vector<int> preds, golds;
            for (const auto& ex : parts.test) {
                preds.push_back(hate::predict(model, ex.text).label);
                golds.push_back(ex.label);
            }
            auto test_report = hate::evaluate(preds, golds);
            Json report{{"corpus", corpus_path},
                        {"examples", corpus.examples.size()},
                        {"dropped_empty", corpus.dropped_empty},
                        {"seed", seed},
                        {"alpha", alpha},
                        {"split", {{"train", parts.train.size()},
                                   {"validation", parts.validation.size()},
                                   {"test", parts.test.size()}}},
                        {"vocabulary_size", model.vocabulary_size()},
                        {"test", to_json(test_report)},
                        {"majority_baseline", hate::majority_baseline(golds)},
                        {"model", model_out}};
            err << "split train/validation/test = " << parts.train.size() << "/" << parts.validation.size() << "/"
                << parts.test.size() << " (seed " << seed << ")\n";
            emit(report.dump(2) + "\n", out_path, out);
            return 0;
        }

        if (*classify) {
            std::string text = text_file.empty() ? text_arg : read_text_file(text_file);
            if (!text::is_valid_utf8(text)) fail(ErrorCode::parse, "input text is not valid UTF-8");
            auto cleaned = text::clean(text);
            Json report;
            std::vector<std::string> flags;
            if (!nb_model.empty()) {
                auto model = hate::TrigramNBModel::load(nb_model);
                auto p = hate::predict(model, cleaned.text);
                if (p.prior_only) flags.emplace_back("prior_only");
                report = Json{{"label", p.label}, {"prob", p.prob_hate}, {"engine", "nb"}, {"flags", flags}};
            } else {
                auto addr = backend_addr.empty() ? default_backend() : std::optional<std::string>(backend_addr);
                if (!addr) fail(ErrorCode::config, "classify needs --nb-model or a backend");
                backend::Client client(backend::connect(*addr));
                auto p = hate::classify_external(client, cleaned.text);
                report = Json{{"label", p.label}, {"prob", p.prob_hate}, {"engine", "backend"}, {"flags", flags}};
            }
            out << report.dump(2) << "\n";
            return 0;
        }

        if (*mel) {
            auto audio = dsp::standardize(load_audio(wav_path));
            auto chunks = dsp::chunk(audio);
            Json files = Json::array();
            for (const auto& c : chunks) {
                auto path = out_path + "." + std::to_string(c.index) + ".mel";
                auto m = dsp::log_mel(c);
                dsp::write_mel_matrix(path, m);
                files.push_back({{"chunk", c.index}, {"path", path}, {"frames", m.frames}, {"mels", m.n_mels}});
            }
            out << Json{{"chunks", chunks.size()}, {"files", files}}.dump(2) << "\n";
            return 0;
        }

        if (*stub) {
            backend::StubBackend handler(backend::parse_stub_spec(stub_spec));
            backend::serve_lines(std::cin, std::cout, handler);
            return 0;
        }
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace aip::pipeline
