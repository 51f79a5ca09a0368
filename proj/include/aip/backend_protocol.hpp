#pragma once

// Newline-delimited JSON protocol between the pipeline and model backends.
//
// Request:  {"v":1,"id":7,"op":"classify","payload":{"text":"..."}}
//           {"v":1,"id":8,"op":"transcribe","payload":{"chunk_index":0,
//            "sample_rate":16000,"samples":"<base64 of 480000 LE float32>"}}
// Response: {"id":7,"ok":true,"result":{"label":1,"prob":0.9}}
//           {"id":8,"ok":true,"result":{"text":"..."}}
//           {"id":9,"ok":false,"error":"op unavailable"}
//
// See PROTOCOL.md for the byte-level description.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace aip::backend {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxErrorExcerpt = 256;
inline constexpr std::size_t kDefaultMaxInFlight = 4;

enum class Op { transcribe, classify, summarize };

std::string_view to_string(Op op);
std::optional<Op> parse_op(std::string_view name);

struct TranscribePayload {
    std::size_t chunk_index = 0;
    int sample_rate = 16000;
    std::vector<float> samples;

    bool operator==(const TranscribePayload&) const = default;
};

struct TextPayload {
    std::string text;

    bool operator==(const TextPayload&) const = default;
};

using Payload = std::variant<TranscribePayload, TextPayload>;

struct Request {
    Op op = Op::classify;
    std::int64_t id = 0;
    Payload payload = TextPayload{};

    bool operator==(const Request&) const = default;
};

struct TextResult {
    std::string text;
    bool operator==(const TextResult&) const = default;
};

struct ClassifyResult {
    int label = 0;
    double prob = 0.0;
    bool operator==(const ClassifyResult&) const = default;
};

using Result = std::variant<std::monostate, TextResult, ClassifyResult>;

struct Response {
    std::int64_t id = 0;
    bool ok = true;
    Result result;
    std::string error;

    bool operator==(const Response&) const = default;
};

// All encoders return a single line without the trailing '\n'. Decoders throw
// Error{protocol} describing the defect and quoting the raw line (truncated
// to kMaxErrorExcerpt bytes).
std::string encode_request(const Request& req);
Request decode_request(std::string_view line);
std::string encode_response(const Response& resp);
Response decode_response(std::string_view line);

// Schema check shared by the encoder and decoder.
void validate(const Request& req);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string excerpt(std::string_view line);

// Byte stream carrying one message per line.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void write_line(std::string_view line) = 0;
    // nullopt on end of stream.
    virtual std::optional<std::string> read_line() = 0;
};

// Server side of a stub or sidecar: one request line in, one response line out.
class LineHandler {
public:
    virtual ~LineHandler() = default;
    virtual std::string handle(std::string_view request_line) = 0;
};

// In-process transport that feeds requests to a handler. With
// `reverse_delivery` pending responses are delivered newest-first, which
// exercises id-based matching.
class LoopbackTransport final : public Transport {
public:
    explicit LoopbackTransport(std::shared_ptr<LineHandler> handler, bool reverse_delivery = false);
    void write_line(std::string_view line) override;
    std::optional<std::string> read_line() override;

private:
    std::shared_ptr<LineHandler> handler_;
    bool reverse_;
    std::vector<std::string> pending_;
};

// `stdio:CMD` spawns CMD via /bin/sh and talks over its stdin/stdout.
class ProcessTransport final : public Transport {
public:
    explicit ProcessTransport(const std::string& command);
    ~ProcessTransport() override;
    ProcessTransport(const ProcessTransport&) = delete;
    ProcessTransport& operator=(const ProcessTransport&) = delete;

    void write_line(std::string_view line) override;
    std::optional<std::string> read_line() override;

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

// `HOST:PORT` over TCP.
class TcpTransport final : public Transport {
public:
    TcpTransport(const std::string& host, int port);
    ~TcpTransport() override;
    TcpTransport(const TcpTransport&) = delete;
    TcpTransport& operator=(const TcpTransport&) = delete;

    void write_line(std::string_view line) override;
    std::optional<std::string> read_line() override;

private:
    int fd_ = -1;
    std::string buffer_;
};

// Deterministic stand-in for the model sidecar:
//  - transcribe: "chunk-<chunk_index>" (or a failure for listed chunks)
//  - classify:   fixed (label, prob)
//  - summarize:  first three sentences, same rule as the native fallback
struct StubConfig {
    int label = 0;
    double prob = 0.0;
    std::vector<std::size_t> failing_chunks;
    bool reverse_delivery = false;
    bool transcribe = true;
    bool classify = true;
    bool summarize = true;
};

class StubBackend final : public LineHandler {
public:
    explicit StubBackend(StubConfig config = {});
    std::string handle(std::string_view request_line) override;

    const StubConfig& config() const { return config_; }

private:
    StubConfig config_;
};

// Parses "stub[:label=L,prob=P,fail=I|J,reverse,ops=transcribe|classify]".
StubConfig parse_stub_spec(std::string_view spec);

// Resolves "stub...", "stdio:CMD" or "HOST:PORT". Throws
// Error{backend_unavailable} when the endpoint cannot be reached and
// Error{config} when the address is malformed.
std::unique_ptr<Transport> connect(const std::string& address);

// Pipelines requests over one transport, keeping at most `max_in_flight`
// outstanding and matching responses by id.
class Client {
public:
    explicit Client(std::unique_ptr<Transport> transport, std::size_t max_in_flight = kDefaultMaxInFlight);

    // Responses are returned in the order of `payloads`. Protocol violations
    // throw Error{protocol}; a closed stream throws Error{backend_unavailable}.
    std::vector<Response> call_batch(Op op, std::vector<Payload> payloads);
    Response call(Op op, Payload payload);

    std::size_t max_in_flight() const { return max_in_flight_; }
    std::int64_t last_id() const { return next_id_ - 1; }

private:
    std::unique_ptr<Transport> transport_;
    std::size_t max_in_flight_;
    std::int64_t next_id_ = 1;
};

// Minimal request loop used by the stub sidecar binary.
void serve_lines(std::istream& in, std::ostream& out, LineHandler& handler);

}  // namespace aip::backend
