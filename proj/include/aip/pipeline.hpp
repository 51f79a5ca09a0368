#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aip/backend_protocol.hpp"
#include "aip/error.hpp"
#include "aip/hatespeech.hpp"
#include "aip/rating.hpp"
#include "aip/similarity.hpp"

namespace aip::pipeline {

using Json = nlohmann::ordered_json;

enum class HateEngine { automatic, nb, backend };

struct RateOptions {
    std::filesystem::path fixtures = "fixtures/videos";
    std::optional<std::string> backend;  // address for backend::connect
    HateEngine hate_engine = HateEngine::automatic;
    std::optional<std::filesystem::path> nb_model;
    sim::Method method = sim::Method::bray_curtis;
    rating::Weights weights;
    sim::TextWeights text_weights;
    std::uint64_t seed = hate::kDefaultSeed;
    std::size_t max_in_flight = backend::kDefaultMaxInFlight;
    std::optional<std::filesystem::path> dump_mel_prefix;
};

struct RateOutcome {
    Json report;
    int exit_code = 0;
    std::optional<std::string> failed_stage;
    std::string error_message;
};

// ingest -> standardize -> chunk -> transcribe -> clean -> classify ->
// summarize -> distances -> rating. Never throws for stage failures; they
// are recorded in the report and mapped to an exit code.
RateOutcome run_rate(const std::string& video_id, const RateOptions& options);

// Exit codes: 0 ok, 1 internal, 2 input, 3 backend/source unavailable.
int exit_code_for(ErrorCode code);

// Report without the `timings` member, for reproducibility comparisons.
Json without_timings(Json report);

std::string render_pretty(const Json& report);

Json to_json(const hate::ClassificationReport& r);

// Entry point shared by the `aip` binary and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aip::pipeline
