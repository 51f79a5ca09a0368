#include "aip/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "aip/asr.hpp"
#include "aip/audio_dsp.hpp"
#include "aip/ingest.hpp"
#include "aip/textnorm.hpp"

namespace aip::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

Json skipped(const std::string& reason) { return Json{{"skipped", true}, {"reason", reason}}; }

Json metadata_json(const VideoMetadata& m) {
    return Json{{"video_id", m.video_id},
                {"title", m.title},
                {"description", m.description},
                {"duration_seconds", m.duration_seconds},
                {"view_count", m.view_count},
                {"like_count", m.like_count}};
}

Json distances_json(const sim::DistanceReport& d) {
    return Json{{"euclidean", d.euclidean},   {"squared_euclidean", d.squared_euclidean},
                {"manhattan", d.manhattan},   {"chessboard", d.chessboard},
                {"bray_curtis", d.bray_curtis}, {"canberra", d.canberra}};
}

std::string_view engine_name(HateEngine e) {
    switch (e) {
        case HateEngine::automatic: return "auto";
        case HateEngine::nb: return "nb";
        case HateEngine::backend: return "backend";
    }
    return "?";
}

}  // namespace

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse:
        case ErrorCode::validation:
        case ErrorCode::unsupported_format:
        case ErrorCode::corrupt_file:
        case ErrorCode::not_found:
        case ErrorCode::config:
        case ErrorCode::undefined_reference:
        case ErrorCode::degenerate_corpus:
            return 2;
        case ErrorCode::backend_unavailable:
        case ErrorCode::source_unavailable:
            return 3;
        case ErrorCode::contract:
        case ErrorCode::protocol:
        case ErrorCode::io:
            return 1;
    }
    return 1;
}

Json to_json(const hate::ClassificationReport& r) {
    return Json{{"tp", r.tp},
                {"tn", r.tn},
                {"fp", r.fp},
                {"fn", r.fn},
                {"accuracy", r.accuracy},
                {"precision", r.precision},
                {"recall", r.recall},
                {"f1", r.f1},
                {"flags", r.flags}};
}

Json without_timings(Json report) {
    report.erase("timings");
    return report;
}

RateOutcome run_rate(const std::string& video_id, const RateOptions& options) {
    RateOutcome outcome;
    Json& report = outcome.report;
    Json timings = Json::object();
    std::vector<std::string> assumptions;

    std::optional<FetchedVideo> video;
    AudioBuffer standardized;
    std::vector<dsp::AudioChunk> chunks;
    asr::Transcript transcript;
    text::NormalizedText clean_transcript;
    hate::Prediction hate_result;
    std::string hate_engine_used;
    std::vector<std::string> hate_flags;
    sim::Summary summary;
    sim::DistanceReport dist;
    double similarity = 0.0;
    std::size_t reference_tokens = 0, summary_tokens = 0;
    std::optional<backend::Client> client;

    auto ensure_client = [&]() -> backend::Client& {
        if (!client) {
            if (!options.backend) {
                fail(ErrorCode::backend_unavailable, "no backend configured (use --backend or AIP_BACKEND)");
            }
            client.emplace(backend::connect(*options.backend), options.max_in_flight);
        }
        return *client;
    };

    auto stage = [&](const char* name, auto&& body) {
        if (outcome.failed_stage) return;
        const auto t0 = Clock::now();
        try {
            body();
        } catch (const Error& e) {
            outcome.failed_stage = name;
            outcome.exit_code = exit_code_for(e.code());
            outcome.error_message = e.what();
            report["error"] = Json{{"stage", name}, {"code", to_string(e.code())}, {"message", e.what()}};
        } catch (const std::exception& e) {
            outcome.failed_stage = name;
            outcome.exit_code = 1;
            outcome.error_message = e.what();
            report["error"] = Json{{"stage", name}, {"code", "internal"}, {"message", e.what()}};
        }
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        timings[name] = std::round(ms * 1000.0) / 1000.0;
    };

    stage("ingest", [&] {
        FixtureVideoSource source(options.fixtures);
        video = fetch_video(video_id, source);
        assumptions.emplace_back("ingest.offline_fixture_adapter");
        assumptions.emplace_back("ingest.stereo_downmix_mean");
        assumptions.emplace_back("ingest.int16_scaled_by_32768");
        assumptions.emplace_back("rating.engagement_counts_excluded");
    });
    stage("standardize", [&] {
        standardized = dsp::standardize(video->audio);
        if (video->audio.sample_rate_hz != kStandardSampleRate) {
            assumptions.emplace_back("dsp.kaiser_windowed_sinc_resampler");
        }
    });
    stage("chunk", [&] {
        chunks = dsp::chunk(standardized);
        if (chunks.empty()) fail(ErrorCode::validation, "audio track is empty");
        assumptions.emplace_back("dsp.hard_30s_chunk_boundaries");
    });
    if (options.dump_mel_prefix) {
        stage("features", [&] {
            for (const auto& c : chunks) {
                auto path = options.dump_mel_prefix->string() + "." + std::to_string(c.index) + ".mel";
                dsp::write_mel_matrix(path, dsp::log_mel(c));
            }
        });
    }
    stage("transcribe", [&] {
        transcript = asr::transcribe(chunks, ensure_client());
        for (const auto& s : transcript.segments) {
            if (s.failed) {
                assumptions.emplace_back("asr.degraded_chunk_empty_segment");
                break;
            }
        }
    });
    stage("clean", [&] {
        clean_transcript = text::clean(transcript.full_text);
        assumptions.emplace_back("textnorm.punctuation_symbols_removed_sinhala_zwj_kept");
        assumptions.emplace_back("textnorm.latin_lowercased");
        assumptions.emplace_back("textnorm.digits_retained");
    });
    stage("classify", [&] {
        HateEngine engine = options.hate_engine;
        if (engine == HateEngine::automatic) {
            engine = options.backend ? HateEngine::backend : options.nb_model ? HateEngine::nb : HateEngine::automatic;
        }
        if (engine == HateEngine::nb) {
            if (!options.nb_model) fail(ErrorCode::config, "--hate-engine nb requires --nb-model");
            auto model = hate::TrigramNBModel::load(*options.nb_model);
            hate_result = hate::predict(model, clean_transcript.text);
            hate_engine_used = "nb";
            if (hate_result.prior_only) hate_flags.emplace_back("prior_only");
            assumptions.emplace_back("hate.nb_char_trigram_baseline");
            assumptions.emplace_back("hate.threshold_0.5_ties_to_hate");
        } else if (engine == HateEngine::backend) {
            hate_result = hate::classify_external(ensure_client(), clean_transcript.text);
            hate_engine_used = "backend";
        } else {
            fail(ErrorCode::config, "no hate-speech engine available (configure --backend or --nb-model)");
        }
    });
    stage("summarize", [&] {
        summary = sim::summarize(client ? &*client : nullptr, transcript.full_text);
        if (summary.summarizer == sim::SummarizerKind::native) assumptions.emplace_back("similarity.native_summarizer");
    });
    stage("distances", [&] {
        auto summary_clean = text::clean(summary.text);
        auto reference_clean = text::clean(
            sim::compose_reference(video->metadata.title, video->metadata.description, options.text_weights));
        reference_tokens = reference_clean.tokens.size();
        summary_tokens = summary_clean.tokens.size();
        auto [va, vb] = sim::vectorize_pair(summary_clean, reference_clean);
        dist = sim::distances(va, vb);
        similarity = sim::similarity_score(dist, options.method, reference_tokens, summary_tokens);
        assumptions.emplace_back("similarity.raw_term_frequency");
        assumptions.emplace_back("similarity.method=" + std::string(sim::to_string(options.method)));
        assumptions.emplace_back("similarity.title_description_weighting=" + std::to_string(options.text_weights.title) +
                                 ":" + std::to_string(options.text_weights.description));
        assumptions.emplace_back(options.method == sim::Method::bray_curtis ? "similarity.score=1-distance"
                                                                            : "similarity.score=1/(1+distance)");
    });
    rating::Rating rating_result;
    stage("rating", [&] {
        std::vector<std::string> flags = hate_flags;
        for (const auto& f : summary.flags) flags.push_back(f);
        rating_result = rating::compute_rating(hate_result.prob_hate, similarity, options.weights, {}, flags);
        assumptions.emplace_back("rating.linear_blend_0_100");
    });

    const std::string reason = outcome.failed_stage ? "stage '" + *outcome.failed_stage + "' failed" : "";
    report["video"] = video ? metadata_json(video->metadata) : skipped(reason);
    if (!chunks.empty()) {
        report["audio"] = Json{{"source_sample_rate_hz", video->audio.sample_rate_hz},
                               {"source_samples", video->audio.samples.size()},
                               {"standardized_samples", standardized.samples.size()},
                               {"chunks", chunks.size()}};
    } else {
        report["audio"] = skipped(reason);
    }

    const bool transcribed = !transcript.segments.empty();
    if (transcribed) {
        Json segs = Json::array();
        for (const auto& s : transcript.segments) {
            Json seg{{"chunk_index", s.chunk_index}, {"text", s.text}, {"failed", s.failed}};
            if (s.failed) seg["error"] = s.error;
            segs.push_back(std::move(seg));
        }
        report["transcript"] = Json{{"segments", segs},
                                    {"full_text", transcript.full_text},
                                    {"clean_text", clean_transcript.text}};
    } else {
        report["transcript"] = skipped(reason);
    }

    if (!hate_engine_used.empty()) {
        report["hate"] = Json{{"label", hate_result.label},
                              {"prob", hate_result.prob_hate},
                              {"engine", hate_engine_used},
                              {"flags", hate_flags}};
    } else {
        report["hate"] = skipped(reason);
    }

    const bool similarity_done = !outcome.failed_stage || (*outcome.failed_stage == "rating");
    if (similarity_done) {
        report["similarity"] = Json{{"method", sim::to_string(options.method)},
                                    {"score", similarity},
                                    {"distances", distances_json(dist)},
                                    {"summarizer", summary.summarizer == sim::SummarizerKind::backend ? "backend" : "native"},
                                    {"summary", summary.text},
                                    {"reference_tokens", reference_tokens},
                                    {"summary_tokens", summary_tokens},
                                    {"flags", summary.flags}};
    } else {
        report["similarity"] = skipped(reason);
    }

    if (!outcome.failed_stage) {
        report["rating"] = Json{{"overall", rating_result.overall},
                                {"verdict", rating::to_string(rating_result.verdict)},
                                {"hate_prob", rating_result.hate_prob},
                                {"similarity", rating_result.similarity},
                                {"components",
                                 {{"weights", {{"hate", rating_result.weights.hate},
                                               {"similarity", rating_result.weights.similarity}}},
                                  {"thresholds", {{"trustworthy", rating_result.thresholds.trustworthy},
                                                  {"caution", rating_result.thresholds.caution}}},
                                  {"flags", rating_result.flags}}}};
    } else {
        report["rating"] = skipped(reason);
    }

    report["config"] = Json{{"backend", options.backend ? Json(*options.backend) : Json(nullptr)},
                            {"hate_engine", engine_name(options.hate_engine)},
                            {"similarity_method", sim::to_string(options.method)},
                            {"weights", {options.weights.hate, options.weights.similarity}},
                            {"text_weights", {options.text_weights.title, options.text_weights.description}},
                            {"seed", options.seed},
                            {"max_in_flight", options.max_in_flight}};
    report["assumptions"] = assumptions;
    if (outcome.failed_stage) report["failed_stage"] = *outcome.failed_stage;
    report["timings"] = timings;

    // Move error (set during the stage loop) after the sections for readability.
    if (report.contains("error")) {
        Json err = report["error"];
        report.erase("error");
        report["error"] = err;
    }
    return outcome;
}

std::string render_pretty(const Json& report) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    auto row = [&](const std::string& key, const std::string& value) {
        os << std::left << std::setw(22) << key << value << '\n';
    };
    if (report.contains("video") && report["video"].contains("title")) {
        row("video", report["video"]["video_id"].get<std::string>());
        row("title", report["video"]["title"].get<std::string>());
    }
    if (report.contains("transcript") && report["transcript"].contains("full_text")) {
        row("chunks", std::to_string(report["transcript"]["segments"].size()));
        row("transcript", report["transcript"]["full_text"].get<std::string>());
    }
    if (report.contains("hate") && report["hate"].contains("prob")) {
        std::ostringstream v;
        v << std::fixed << std::setprecision(4) << report["hate"]["prob"].get<double>() << " (label "
          << report["hate"]["label"].get<int>() << ", " << report["hate"]["engine"].get<std::string>() << ")";
        row("hate probability", v.str());
    }
    if (report.contains("similarity") && report["similarity"].contains("score")) {
        std::ostringstream v;
        v << std::fixed << std::setprecision(4) << report["similarity"]["score"].get<double>() << " ("
          << report["similarity"]["method"].get<std::string>() << ", "
          << report["similarity"]["summarizer"].get<std::string>() << " summary)";
        row("similarity", v.str());
    }
    if (report.contains("rating") && report["rating"].contains("overall")) {
        row("rating", std::to_string(report["rating"]["overall"].get<int>()) + "/100 " +
                          report["rating"]["verdict"].get<std::string>());
    }
    if (report.contains("failed_stage")) {
        row("failed stage", report["failed_stage"].get<std::string>());
        row("error", report["error"]["message"].get<std::string>());
    }
    return os.str();
}

}  // namespace aip::pipeline
