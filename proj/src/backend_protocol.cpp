#include "aip/backend_protocol.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>

#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "aip/error.hpp"
#include "aip/similarity.hpp"
#include "aip/textnorm.hpp"

namespace aip::backend {

namespace {

using json = nlohmann::ordered_json;

constexpr std::size_t kTranscribeSamples = 480000;

[[noreturn]] void protocol_error(const std::string& defect, std::string_view line) {
    fail(ErrorCode::protocol, "protocol error: " + defect + "; line: " + excerpt(line));
}

json parse_line(std::string_view line) {
    if (line.find('\n') != std::string_view::npos) protocol_error("embedded newline", line);
    try {
        return json::parse(line);
    } catch (const json::parse_error&) {
        protocol_error("not valid JSON", line);
    }
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where,
                         std::string_view line) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            protocol_error("unexpected key '" + key + "' in " + std::string(where), line);
        }
    }
}

std::int64_t require_id(const json& doc, std::string_view line, bool allow_negative_one) {
    auto it = doc.find("id");
    if (it == doc.end()) protocol_error("missing 'id'", line);
    if (!it->is_number_integer()) protocol_error("'id' is not an integer", line);
    auto id = it->get<std::int64_t>();
    if (id < 0 && !(allow_negative_one && id == -1)) protocol_error("'id' is negative", line);
    return id;
}

std::vector<std::uint8_t> floats_to_le_bytes(const std::vector<float>& samples) {
    std::vector<std::uint8_t> bytes(samples.size() * 4);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::uint32_t raw;
        std::memcpy(&raw, &samples[i], 4);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>(raw >> (8 * b));
    }
    return bytes;
}

std::vector<float> le_bytes_to_floats(const std::vector<std::uint8_t>& bytes) {
    std::vector<float> samples(bytes.size() / 4);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::uint32_t raw = 0;
        for (int b = 0; b < 4; ++b) raw |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
        std::memcpy(&samples[i], &raw, 4);
    }
    return samples;
}

constexpr std::string_view kBase64Alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int base64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

void ignore_sigpipe() {
    static const bool done = [] {
        struct sigaction sa {};
        sa.sa_handler = SIG_IGN;
        sigaction(SIGPIPE, &sa, nullptr);
        return true;
    }();
    (void)done;
}

bool write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

std::optional<std::string> read_line_fd(int fd, std::string& buffer) {
    while (true) {
        auto nl = buffer.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            return line;
        }
        char chunk[65536];
        ssize_t n = ::read(fd, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) continue;
            return std::nullopt;
        }
        if (n == 0) return std::nullopt;
        buffer.append(chunk, static_cast<std::size_t>(n));
    }
}

}  // namespace

std::string_view to_string(Op op) {
    switch (op) {
        case Op::transcribe: return "transcribe";
        case Op::classify: return "classify";
        case Op::summarize: return "summarize";
    }
    return "?";
}

std::optional<Op> parse_op(std::string_view name) {
    if (name == "transcribe") return Op::transcribe;
    if (name == "classify") return Op::classify;
    if (name == "summarize") return Op::summarize;
    return std::nullopt;
}

std::string excerpt(std::string_view line) {
    if (line.size() <= kMaxErrorExcerpt) return std::string(line);
    std::size_t cut = kMaxErrorExcerpt;
    // back off continuation bytes so the excerpt stays valid UTF-8
    while (cut > 0 && (static_cast<unsigned char>(line[cut]) & 0xC0) == 0x80) --cut;
    return std::string(line.substr(0, cut)) + "...";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kBase64Alphabet[(v >> 18) & 63]);
        out.push_back(kBase64Alphabet[(v >> 12) & 63]);
        out.push_back(kBase64Alphabet[(v >> 6) & 63]);
        out.push_back(kBase64Alphabet[v & 63]);
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        std::uint32_t v = bytes[i] << 16;
        out.push_back(kBase64Alphabet[(v >> 18) & 63]);
        out.push_back(kBase64Alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (rest == 2) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kBase64Alphabet[(v >> 18) & 63]);
        out.push_back(kBase64Alphabet[(v >> 12) & 63]);
        out.push_back(kBase64Alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) fail(ErrorCode::protocol, "base64: length is not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        const bool last = i + 4 == text.size();
        int pad = 0;
        std::array<int, 4> v{};
        for (int k = 0; k < 4; ++k) {
            char c = text[i + k];
            if (c == '=' && last && k >= 2) {
                ++pad;
                v[k] = 0;
                continue;
            }
            if (pad > 0) fail(ErrorCode::protocol, "base64: data after padding");
            v[k] = base64_value(c);
            if (v[k] < 0) fail(ErrorCode::protocol, "base64: invalid character");
        }
        std::uint32_t word = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out.push_back(static_cast<std::uint8_t>(word >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(word >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(word));
    }
    return out;
}

void validate(const Request& req) {
    if (req.id < 0) fail(ErrorCode::protocol, "schema: request id must be non-negative");
    if (req.op == Op::transcribe) {
        const auto* p = std::get_if<TranscribePayload>(&req.payload);
        if (!p) fail(ErrorCode::protocol, "schema: transcribe request needs an audio payload");
        if (p->sample_rate != 16000) fail(ErrorCode::protocol, "schema: transcribe sample_rate must be 16000");
        if (p->samples.size() != kTranscribeSamples) {
            fail(ErrorCode::protocol, "schema: transcribe payload must hold 480000 samples, got " +
                                          std::to_string(p->samples.size()));
        }
    } else {
        const auto* p = std::get_if<TextPayload>(&req.payload);
        if (!p) fail(ErrorCode::protocol, "schema: " + std::string(to_string(req.op)) + " request needs a text payload");
        if (!text::is_valid_utf8(p->text)) fail(ErrorCode::protocol, "schema: text payload is not valid UTF-8");
    }
}

std::string encode_request(const Request& req) {
    validate(req);
    json payload;
    if (req.op == Op::transcribe) {
        const auto& p = std::get<TranscribePayload>(req.payload);
        payload = {{"chunk_index", p.chunk_index},
                   {"sample_rate", p.sample_rate},
                   {"samples", base64_encode(floats_to_le_bytes(p.samples))}};
    } else {
        payload = {{"text", std::get<TextPayload>(req.payload).text}};
    }
    json doc = {{"v", kProtocolVersion}, {"id", req.id}, {"op", to_string(req.op)}, {"payload", payload}};
    return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

Request decode_request(std::string_view line) {
    json doc = parse_line(line);
    if (!doc.is_object()) protocol_error("message is not a JSON object", line);
    reject_unknown_keys(doc, {"v", "id", "op", "payload"}, "request", line);

    auto v = doc.find("v");
    if (v == doc.end()) protocol_error("missing 'v'", line);
    if (!v->is_number_integer() || v->get<std::int64_t>() != kProtocolVersion) {
        protocol_error("unsupported protocol version", line);
    }

    Request req;
    req.id = require_id(doc, line, false);

    auto op = doc.find("op");
    if (op == doc.end()) protocol_error("missing 'op'", line);
    if (!op->is_string()) protocol_error("'op' is not a string", line);
    auto parsed = parse_op(op->get<std::string>());
    if (!parsed) protocol_error("unknown op '" + op->get<std::string>() + "'", line);
    req.op = *parsed;

    auto payload = doc.find("payload");
    if (payload == doc.end()) protocol_error("missing 'payload'", line);
    if (!payload->is_object()) protocol_error("'payload' is not an object", line);

    if (req.op == Op::transcribe) {
        reject_unknown_keys(*payload, {"chunk_index", "sample_rate", "samples"}, "payload", line);
        TranscribePayload p;
        auto idx = payload->find("chunk_index");
        if (idx == payload->end() || !idx->is_number_unsigned()) protocol_error("'chunk_index' missing or invalid", line);
        p.chunk_index = idx->get<std::size_t>();
        auto rate = payload->find("sample_rate");
        if (rate == payload->end() || !rate->is_number_integer()) protocol_error("'sample_rate' missing or invalid", line);
        p.sample_rate = rate->get<int>();
        auto samples = payload->find("samples");
        if (samples == payload->end() || !samples->is_string()) protocol_error("'samples' missing or not a string", line);
        std::vector<std::uint8_t> bytes;
        try {
            bytes = base64_decode(samples->get_ref<const std::string&>());
        } catch (const Error& e) {
            protocol_error(std::string("'samples' ") + e.what(), line);
        }
        if (bytes.size() % 4 != 0) protocol_error("'samples' is not a whole number of float32 values", line);
        p.samples = le_bytes_to_floats(bytes);
        req.payload = std::move(p);
    } else {
        reject_unknown_keys(*payload, {"text"}, "payload", line);
        auto t = payload->find("text");
        if (t == payload->end() || !t->is_string()) protocol_error("'text' missing or not a string", line);
        req.payload = TextPayload{t->get<std::string>()};
    }

    try {
        validate(req);
    } catch (const Error& e) {
        protocol_error(e.what(), line);
    }
    return req;
}

std::string encode_response(const Response& resp) {
    json doc = {{"id", resp.id}, {"ok", resp.ok}};
    if (resp.ok) {
        if (const auto* t = std::get_if<TextResult>(&resp.result)) {
            doc["result"] = {{"text", t->text}};
        } else if (const auto* c = std::get_if<ClassifyResult>(&resp.result)) {
            doc["result"] = {{"label", c->label}, {"prob", c->prob}};
        } else {
            fail(ErrorCode::protocol, "schema: ok response without a result");
        }
    } else {
        doc["error"] = resp.error;
    }
    return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

Response decode_response(std::string_view line) {
    json doc = parse_line(line);
    if (!doc.is_object()) protocol_error("message is not a JSON object", line);
    reject_unknown_keys(doc, {"id", "ok", "result", "error"}, "response", line);

    Response resp;
    resp.id = require_id(doc, line, true);

    auto ok = doc.find("ok");
    if (ok == doc.end()) protocol_error("missing 'ok'", line);
    if (!ok->is_boolean()) protocol_error("'ok' is not a boolean", line);
    resp.ok = ok->get<bool>();

    const bool has_result = doc.contains("result");
    const bool has_error = doc.contains("error");
    if (has_result && has_error) protocol_error("both 'result' and 'error' present", line);
    if (!has_result && !has_error) protocol_error("neither 'result' nor 'error' present", line);

    if (resp.ok) {
        if (!has_result) protocol_error("ok response carries 'error' instead of 'result'", line);
        const auto& r = doc["result"];
        if (!r.is_object()) protocol_error("'result' is not an object", line);
        if (r.contains("text")) {
            reject_unknown_keys(r, {"text"}, "result", line);
            if (!r["text"].is_string()) protocol_error("'result.text' is not a string", line);
            resp.result = TextResult{r["text"].get<std::string>()};
        } else if (r.contains("label") || r.contains("prob")) {
            reject_unknown_keys(r, {"label", "prob"}, "result", line);
            if (!r.contains("label")) protocol_error("'result.label' missing", line);
            if (!r.contains("prob")) protocol_error("'result.prob' missing", line);
            const auto& label = r["label"];
            if (!label.is_number_integer() || (label.get<std::int64_t>() != 0 && label.get<std::int64_t>() != 1)) {
                protocol_error("'result.label' must be 0 or 1", line);
            }
            const auto& prob = r["prob"];
            if (!prob.is_number()) protocol_error("'result.prob' is not a number", line);
            double p = prob.get<double>();
            if (!(p >= 0.0 && p <= 1.0)) protocol_error("'result.prob' outside [0,1]", line);
            resp.result = ClassifyResult{static_cast<int>(label.get<std::int64_t>()), p};
        } else {
            protocol_error("'result' has neither 'text' nor 'label'/'prob'", line);
        }
    } else {
        if (!has_error) protocol_error("failed response carries 'result' instead of 'error'", line);
        if (!doc["error"].is_string()) protocol_error("'error' is not a string", line);
        resp.error = doc["error"].get<std::string>();
    }
    return resp;
}

LoopbackTransport::LoopbackTransport(std::shared_ptr<LineHandler> handler, bool reverse_delivery)
    : handler_(std::move(handler)), reverse_(reverse_delivery) {}

void LoopbackTransport::write_line(std::string_view line) { pending_.push_back(handler_->handle(line)); }

std::optional<std::string> LoopbackTransport::read_line() {
    if (pending_.empty()) return std::nullopt;
    std::string line;
    if (reverse_) {
        line = std::move(pending_.back());
        pending_.pop_back();
    } else {
        line = std::move(pending_.front());
        pending_.erase(pending_.begin());
    }
    return line;
}

ProcessTransport::ProcessTransport(const std::string& command) {
    ignore_sigpipe();
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0) fail(ErrorCode::backend_unavailable, "stdio backend: pipe() failed");
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        fail(ErrorCode::backend_unavailable, "stdio backend: pipe() failed");
    }
    pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        fail(ErrorCode::backend_unavailable, "stdio backend: fork() failed");
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

ProcessTransport::~ProcessTransport() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
        int status = 0;
        for (int i = 0; i < 100; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
            ::usleep(10000);
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
    }
}

void ProcessTransport::write_line(std::string_view line) {
    std::string msg(line);
    msg.push_back('\n');
    if (!write_all(to_child_, msg)) fail(ErrorCode::backend_unavailable, "stdio backend: write failed (process exited?)");
}

std::optional<std::string> ProcessTransport::read_line() { return read_line_fd(from_child_, buffer_); }

TcpTransport::TcpTransport(const std::string& host, int port) {
    ignore_sigpipe();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port_str = std::to_string(port);
    if (::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res) != 0) {
        fail(ErrorCode::backend_unavailable, "tcp backend: cannot resolve " + host);
    }
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) fail(ErrorCode::backend_unavailable, "tcp backend: cannot connect to " + host + ":" + port_str);
}

TcpTransport::~TcpTransport() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpTransport::write_line(std::string_view line) {
    std::string msg(line);
    msg.push_back('\n');
    std::string_view rest = msg;
    while (!rest.empty()) {
        ssize_t n = ::send(fd_, rest.data(), rest.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::backend_unavailable, "tcp backend: send failed");
        }
        rest.remove_prefix(static_cast<std::size_t>(n));
    }
}

std::optional<std::string> TcpTransport::read_line() { return read_line_fd(fd_, buffer_); }

StubBackend::StubBackend(StubConfig config) : config_(std::move(config)) {}

std::string StubBackend::handle(std::string_view request_line) {
    Response resp;
    Request req;
    try {
        req = decode_request(request_line);
    } catch (const Error& e) {
        resp.id = -1;
        try {
            auto doc = json::parse(request_line);
            if (doc.is_object() && doc.contains("id") && doc["id"].is_number_integer() && doc["id"].get<std::int64_t>() >= 0) {
                resp.id = doc["id"].get<std::int64_t>();
            }
        } catch (const json::exception&) {
        }
        resp.ok = false;
        resp.error = e.what();
        return encode_response(resp);
    }

    resp.id = req.id;
    auto unavailable = [&] {
        resp.ok = false;
        resp.error = "op unavailable";
        return encode_response(resp);
    };
    switch (req.op) {
        case Op::transcribe: {
            if (!config_.transcribe) return unavailable();
            const auto& p = std::get<TranscribePayload>(req.payload);
            const auto& failing = config_.failing_chunks;
            if (std::find(failing.begin(), failing.end(), p.chunk_index) != failing.end()) {
                resp.ok = false;
                resp.error = "transcription failed for chunk " + std::to_string(p.chunk_index);
            } else {
                resp.result = TextResult{"chunk-" + std::to_string(p.chunk_index)};
            }
            break;
        }
        case Op::classify:
            if (!config_.classify) return unavailable();
            resp.result = ClassifyResult{config_.label, config_.prob};
            break;
        case Op::summarize:
            if (!config_.summarize) return unavailable();
            resp.result = TextResult{sim::lead_sentences(std::get<TextPayload>(req.payload).text, 3)};
            break;
    }
    return encode_response(resp);
}

StubConfig parse_stub_spec(std::string_view spec) {
    StubConfig cfg;
    if (spec.substr(0, 4) != "stub") fail(ErrorCode::config, "stub spec must start with 'stub'");
    spec.remove_prefix(4);
    if (spec.empty()) return cfg;
    if (spec.front() != ':') fail(ErrorCode::config, "stub spec: expected ':' after 'stub'");
    spec.remove_prefix(1);

    auto parse_double = [](std::string_view s, const char* what) {
        double v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) fail(ErrorCode::config, std::string("stub spec: bad ") + what);
        return v;
    };
    auto parse_size = [](std::string_view s, const char* what) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) fail(ErrorCode::config, std::string("stub spec: bad ") + what);
        return v;
    };
    auto split = [](std::string_view s, char sep) {
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        while (start <= s.size()) {
            auto pos = s.find(sep, start);
            if (pos == std::string_view::npos) pos = s.size();
            parts.push_back(s.substr(start, pos - start));
            start = pos + 1;
        }
        return parts;
    };

    for (auto item : split(spec, ',')) {
        if (item.empty()) continue;
        auto eq = item.find('=');
        auto key = item.substr(0, eq);
        auto value = eq == std::string_view::npos ? std::string_view{} : item.substr(eq + 1);
        if (key == "label") {
            auto l = parse_size(value, "label");
            if (l > 1) fail(ErrorCode::config, "stub spec: label must be 0 or 1");
            cfg.label = static_cast<int>(l);
        } else if (key == "prob") {
            cfg.prob = parse_double(value, "prob");
            if (!(cfg.prob >= 0.0 && cfg.prob <= 1.0)) fail(ErrorCode::config, "stub spec: prob must be in [0,1]");
        } else if (key == "fail") {
            for (auto idx : split(value, '|')) cfg.failing_chunks.push_back(parse_size(idx, "fail index"));
        } else if (key == "reverse") {
            cfg.reverse_delivery = true;
        } else if (key == "ops") {
            cfg.transcribe = cfg.classify = cfg.summarize = false;
            for (auto name : split(value, '|')) {
                auto op = parse_op(name);
                if (!op) fail(ErrorCode::config, "stub spec: unknown op '" + std::string(name) + "'");
                (*op == Op::transcribe ? cfg.transcribe : *op == Op::classify ? cfg.classify : cfg.summarize) = true;
            }
        } else {
            fail(ErrorCode::config, "stub spec: unknown option '" + std::string(key) + "'");
        }
    }
    return cfg;
}

std::unique_ptr<Transport> connect(const std::string& address) {
    if (address.rfind("stub", 0) == 0) {
        auto cfg = parse_stub_spec(address);
        bool reverse = cfg.reverse_delivery;
        return std::make_unique<LoopbackTransport>(std::make_shared<StubBackend>(std::move(cfg)), reverse);
    }
    if (address.rfind("stdio:", 0) == 0) {
        auto command = address.substr(6);
        if (command.empty()) fail(ErrorCode::config, "backend address 'stdio:' needs a command");
        return std::make_unique<ProcessTransport>(command);
    }
    auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
        fail(ErrorCode::config, "backend address must be HOST:PORT, stdio:CMD or stub[:...], got '" + address + "'");
    }
    int port = 0;
    auto port_str = std::string_view(address).substr(colon + 1);
    auto [ptr, ec] = std::from_chars(port_str.data(), port_str.data() + port_str.size(), port);
    if (ec != std::errc() || ptr != port_str.data() + port_str.size() || port <= 0 || port > 65535) {
        fail(ErrorCode::config, "backend address has an invalid port: '" + address + "'");
    }
    return std::make_unique<TcpTransport>(address.substr(0, colon), port);
}

Client::Client(std::unique_ptr<Transport> transport, std::size_t max_in_flight)
    : transport_(std::move(transport)), max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {}

std::vector<Response> Client::call_batch(Op op, std::vector<Payload> payloads) {
    const std::size_t total = payloads.size();
    std::vector<Response> results(total);
    std::map<std::int64_t, std::size_t> in_flight;
    std::size_t sent = 0;
    std::size_t done = 0;

    while (done < total) {
        while (sent < total && in_flight.size() < max_in_flight_) {
            Request req{op, next_id_++, std::move(payloads[sent])};
            transport_->write_line(encode_request(req));
            in_flight.emplace(req.id, sent);
            ++sent;
        }
        auto line = transport_->read_line();
        if (!line) {
            fail(ErrorCode::backend_unavailable, "backend closed the stream with " + std::to_string(in_flight.size()) +
                                                     " request(s) outstanding");
        }
        Response resp = decode_response(*line);
        auto it = in_flight.find(resp.id);
        if (it == in_flight.end()) {
            fail(ErrorCode::protocol, "protocol error: response id " + std::to_string(resp.id) +
                                          " matches no outstanding request; line: " + excerpt(*line));
        }
        if (resp.ok) {
            const bool want_label = op == Op::classify;
            const bool got_label = std::holds_alternative<ClassifyResult>(resp.result);
            if (want_label != got_label) {
                fail(ErrorCode::protocol, "protocol error: result shape does not match op '" +
                                              std::string(to_string(op)) + "'; line: " + excerpt(*line));
            }
        }
        results[it->second] = std::move(resp);
        in_flight.erase(it);
        ++done;
    }
    return results;
}

Response Client::call(Op op, Payload payload) {
    std::vector<Payload> one;
    one.push_back(std::move(payload));
    return std::move(call_batch(op, std::move(one)).front());
}

void serve_lines(std::istream& in, std::ostream& out, LineHandler& handler) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out << handler.handle(line) << '\n';
        out.flush();
    }
}

}  // namespace aip::backend
