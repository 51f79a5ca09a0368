// Drives a live backend (stdio:CMD or HOST:PORT) through the wire protocol.
//   protocol_conformance ADDRESS [--unconfigured OP]...
// Ops listed as unconfigured must answer ok=false "op unavailable".

#include <algorithm>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "aip/audio_dsp.hpp"
#include "aip/backend_protocol.hpp"
#include "aip/error.hpp"
#include "protocol_corpus.hpp"

using namespace aip;
using namespace aip::backend;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    std::cout << (ok ? "PASS  " : "FAIL  ") << what << std::endl;
    failures += !ok;
}

bool result_fits(Op op, const Response& r) {
    if (!r.ok) return false;
    if (op == Op::classify) {
        const auto* c = std::get_if<ClassifyResult>(&r.result);
        return c && (c->label == 0 || c->label == 1) && c->prob >= 0.0 && c->prob <= 1.0;
    }
    return std::holds_alternative<TextResult>(r.result);
}

Payload sample_payload(Op op) {
    if (op != Op::transcribe) return TextPayload{"මම හොඳින්. ඔයා කොහොමද? Thanks."};
    TranscribePayload p;
    p.chunk_index = 0;
    p.samples.assign(dsp::kChunkSamples, 0.0f);
    return p;
}

// The id the server should echo for an unusable request line.
std::int64_t echoed_id(const std::string& line) {
    try {
        auto doc = nlohmann::json::parse(line);
        if (doc.is_object() && doc.contains("id") && doc["id"].is_number_integer() && doc["id"].get<std::int64_t>() >= 0)
            return doc["id"].get<std::int64_t>();
    } catch (const nlohmann::json::exception&) {
    }
    return -1;
}

void malformed_requests(Transport& transport) {
    for (const auto& bad : testutil::malformed_lines()) {
        if (!bad.is_request) continue;
        transport.write_line(bad.line);
        auto line = transport.read_line();
        if (!line) {
            check(false, "connection closed after bad line (" + bad.defect + ")");
            return;
        }
        try {
            auto resp = decode_response(*line);
            check(!resp.ok && resp.id == echoed_id(bad.line) && resp.error.find(bad.defect) != std::string::npos,
                  "bad request answered with an error naming '" + bad.defect + "'");
        } catch (const Error& e) {
            check(false, std::string("undecodable reply to bad line: ") + e.what());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: protocol_conformance ADDRESS [--unconfigured OP]...\n";
        return 2;
    }
    const std::string address = argv[1];
    std::set<Op> unconfigured;
    for (int i = 2; i < argc; ++i) {
        const std::string arg = argv[i];
        auto op = i + 1 < argc ? parse_op(argv[i + 1]) : std::nullopt;
        if (arg != "--unconfigured" || !op) {
            std::cerr << "bad argument: " << arg << "\n";
            return 2;
        }
        unconfigured.insert(*op);
        ++i;
    }

    try {
        auto transport = connect(address);
        malformed_requests(*transport);
        Client client(std::move(transport), 8);

        for (Op op : {Op::transcribe, Op::classify, Op::summarize}) {
            const auto name = std::string(to_string(op));
            auto resp = client.call(op, sample_payload(op));
            check(resp.id == client.last_id(), name + ": id echoed");
            if (unconfigured.count(op))
                check(!resp.ok && resp.error == "op unavailable", name + ": unconfigured op answers 'op unavailable'");
            else
                check(result_fits(op, resp), name + ": schema-exact result");
        }

        // Random traffic from the round-trip corpus, pipelined.
        std::mt19937_64 rng(7);
        std::size_t answered = 0, total = 0;
        for (int batch = 0; batch < 20; ++batch) {
            std::vector<Payload> payloads;
            const Op op = batch % 5 == 0 ? Op::transcribe : batch % 2 ? Op::classify : Op::summarize;
            for (int k = 0; k < 10; ++k) {
                auto req = testutil::random_request(rng, op == Op::transcribe ? 1.0 : 0.0);
                if (op == Op::transcribe) std::get<TranscribePayload>(req.payload).chunk_index = static_cast<std::size_t>(k);
                payloads.push_back(req.payload);
            }
            auto responses = client.call_batch(op, payloads);
            for (const auto& r : responses) {
                ++total;
                answered += unconfigured.count(op) ? (!r.ok && r.error == "op unavailable") : result_fits(op, r);
            }
        }
        check(answered == total, "pipelined random traffic: " + std::to_string(answered) + "/" + std::to_string(total));

        auto after = client.call(Op::classify, TextPayload{"still there?"});
        check(after.id == client.last_id(), "connection still usable at the end");
    } catch (const Error& e) {
        check(false, std::string("backend error: ") + e.what());
    }
    return failures ? 1 : 0;
}
