#include <doctest.h>

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "aip/audio_dsp.hpp"
#include "aip/ingest.hpp"
#include "aip/pipeline.hpp"
#include "test_util.hpp"

using aip::pipeline::Json;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "aip");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = aip::pipeline::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string fixtures() { return std::string(AIP_SOURCE_DIR) + "/fixtures/videos"; }
std::string surrogate() { return std::string(AIP_SOURCE_DIR) + "/fixtures/hate_surrogate.tsv"; }

}  // namespace

TEST_CASE("rate: fixture video with stubs gives a full deterministic report") {
    auto a = run({"rate", "vid001", "--fixtures", fixtures(), "--backend", "stub:label=1,prob=0.9"});
    auto b = run({"rate", "vid001", "--fixtures", fixtures(), "--backend", "stub:label=1,prob=0.9"});
    REQUIRE(a.code == 0);
    auto ra = Json::parse(a.out), rb = Json::parse(b.out);
    CHECK(aip::pipeline::without_timings(ra).dump() == aip::pipeline::without_timings(rb).dump());
    for (const char* section : {"video", "audio", "transcript", "hate", "similarity", "rating", "config", "assumptions"}) {
        CAPTURE(section);
        CHECK(ra.contains(section));
    }
    CHECK(ra["transcript"]["full_text"] == "chunk-0 chunk-1");
    CHECK(ra["hate"]["engine"] == "backend");
    CHECK(ra["hate"]["prob"] == 0.9);
    CHECK(ra["audio"]["chunks"] == 2);
    CHECK_FALSE(ra.contains("failed_stage"));
}

TEST_CASE("rate: boundary stubs reach 100 and 0") {
    auto top = run({"rate", "vid002", "--fixtures", fixtures(), "--backend", "stub:label=0,prob=0", "--text-weights",
                    "1,0"});
    REQUIRE(top.code == 0);
    CHECK(Json::parse(top.out)["rating"]["overall"] == 100);
    CHECK(Json::parse(top.out)["rating"]["verdict"] == "trustworthy");

    auto bottom = run({"rate", "vid001", "--fixtures", fixtures(), "--backend", "stub:label=1,prob=1"});
    REQUIRE(bottom.code == 0);
    CHECK(Json::parse(bottom.out)["rating"]["overall"] == 0);
    CHECK(Json::parse(bottom.out)["rating"]["verdict"] == "misleading_or_hateful");
}

TEST_CASE("rate: missing fixture exits 2 and names ingest") {
    auto r = run({"rate", "does-not-exist", "--fixtures", fixtures(), "--backend", "stub"});
    CHECK(r.code == 2);
    CHECK(r.err.find("ingest") != std::string::npos);
    auto report = Json::parse(r.out);
    CHECK(report["failed_stage"] == "ingest");
    CHECK(report["rating"]["skipped"] == true);
    CHECK(report["error"]["code"] == "not_found");
}

TEST_CASE("rate: unreachable backend exits 3") {
    auto r = run({"rate", "vid001", "--fixtures", fixtures(), "--backend", "stdio:exit 0"});
    CHECK(r.code == 3);
    CHECK(Json::parse(r.out)["failed_stage"] == "transcribe");
}

TEST_CASE("rate: no backend configured cannot transcribe") {
    auto r = run({"rate", "vid001", "--fixtures", fixtures()});
    CHECK(r.code != 0);
    CHECK(Json::parse(r.out).contains("failed_stage"));
}

TEST_CASE("rate: failing chunk degrades instead of aborting") {
    auto r = run({"rate", "vid001", "--fixtures", fixtures(), "--backend", "stub:fail=0"});
    REQUIRE(r.code == 0);
    auto report = Json::parse(r.out);
    CHECK(report["transcript"]["segments"][0]["failed"] == true);
    CHECK(report["transcript"]["full_text"] == " chunk-1");
}

TEST_CASE("rate: nb engine is plumbed through") {
    testutil::TempDir dir;
    auto model = (dir / "m.bin").string();
    REQUIRE(run({"train-nb", surrogate(), "--model-out", model}).code == 0);
    auto r = run({"rate", "vid001", "--fixtures", fixtures(), "--backend", "stub", "--hate-engine", "nb", "--nb-model",
                  model});
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["hate"]["engine"] == "nb");
}

TEST_CASE("rate: option errors exit 2") {
    CHECK(run({"rate", "vid001", "--fixtures", fixtures(), "--backend", "stub", "--weights", "0.9,0.9"}).code == 2);
    CHECK(run({"rate", "vid001", "--fixtures", fixtures(), "--backend", "stub", "--similarity-method", "cosine"}).code == 2);
    CHECK(run({"rate", "vid001", "--hate-engine", "magic"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
}

TEST_CASE("rate: similarity method and mel dump") {
    testutil::TempDir dir;
    auto prefix = (dir / "feat").string();
    auto r = run({"rate", "vid001", "--fixtures", fixtures(), "--backend", "stub", "--similarity-method", "manhattan",
                  "--dump-mel", prefix});
    REQUIRE(r.code == 0);
    auto report = Json::parse(r.out);
    CHECK(report["similarity"]["method"] == "manhattan");
    const double d = report["similarity"]["distances"]["manhattan"];
    CHECK(report["similarity"]["score"].get<double>() == doctest::Approx(1.0 / (1.0 + d)));
    auto mel = aip::dsp::read_mel_matrix(prefix + ".1.mel");
    CHECK(mel.frames == 3000);
}

TEST_CASE("evaluate-wer") {
    testutil::TempDir dir;
    testutil::write_file(dir / "same.tsv", "a b c\ta b c\nකොහොමද\tකොහොමද\n");
    auto r = run({"evaluate-wer", (dir / "same.tsv").string()});
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["wer"] == 0.0);
    CHECK(run({"evaluate-wer", (dir / "absent.tsv").string()}).code == 2);
}

TEST_CASE("train-nb: byte-identical models across runs") {
    testutil::TempDir dir;
    auto a = run({"train-nb", surrogate(), "--model-out", (dir / "a.bin").string()});
    auto b = run({"train-nb", surrogate(), "--model-out", (dir / "b.bin").string()});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(testutil::read_file(dir / "a.bin") == testutil::read_file(dir / "b.bin"));
    auto report = Json::parse(a.out);
    CHECK(report["split"]["train"] == 480);
    CHECK(report["test"].contains("f1"));
    CHECK(a.err.find("480/60/60") != std::string::npos);

    testutil::write_file(dir / "bad.tsv", "3\toops\n");
    CHECK(run({"train-nb", (dir / "bad.tsv").string(), "--model-out", (dir / "c.bin").string()}).code == 2);
}

TEST_CASE("classify") {
    testutil::TempDir dir;
    auto model = (dir / "m.bin").string();
    REQUIRE(run({"train-nb", surrogate(), "--model-out", model}).code == 0);
    auto empty = run({"classify", "--text", "", "--nb-model", model});
    REQUIRE(empty.code == 0);
    auto flags = Json::parse(empty.out)["flags"];
    CHECK(std::find(flags.begin(), flags.end(), "prior_only") != flags.end());

    auto stub = run({"classify", "--text", "hello", "--backend", "stub:label=1,prob=0.9"});
    REQUIRE(stub.code == 0);
    CHECK(Json::parse(stub.out)["prob"] == 0.9);
}

TEST_CASE("mel subcommand") {
    testutil::TempDir dir;
    aip::write_wav(dir / "t.wav", aip::AudioBuffer{std::vector<float>(8000 * 31, 0.1f), 8000});
    auto r = run({"mel", (dir / "t.wav").string(), "--out", (dir / "m").string()});
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["chunks"] == 2);
    CHECK(std::filesystem::exists(dir / "m.0.mel"));
    CHECK(std::filesystem::exists(dir / "m.1.mel"));
}
