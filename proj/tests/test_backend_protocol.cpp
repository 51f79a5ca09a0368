#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <sstream>
#include <thread>

#include "aip/backend_protocol.hpp"
#include "aip/textnorm.hpp"
#include "backend_util.hpp"
#include "protocol_corpus.hpp"
#include "test_util.hpp"

using namespace aip;
using namespace aip::backend;
using testutil::error_code_of;
using testutil::error_message_of;

namespace {

// Wraps a transport and records the peak number of unanswered requests.
class CountingTransport final : public Transport {
public:
    explicit CountingTransport(std::unique_ptr<Transport> inner, std::size_t* peak)
        : inner_(std::move(inner)), peak_(peak) {}
    void write_line(std::string_view line) override {
        ++outstanding_;
        *peak_ = std::max(*peak_, outstanding_);
        inner_->write_line(line);
    }
    std::optional<std::string> read_line() override {
        auto l = inner_->read_line();
        if (l) --outstanding_;
        return l;
    }

private:
    std::unique_ptr<Transport> inner_;
    std::size_t* peak_;
    std::size_t outstanding_ = 0;
};

class ScriptedTransport final : public Transport {
public:
    explicit ScriptedTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    void write_line(std::string_view) override {}
    std::optional<std::string> read_line() override {
        if (next_ >= replies_.size()) return std::nullopt;
        return replies_[next_++];
    }

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

// One-connection line server on 127.0.0.1 backed by the stub.
class TcpStubServer {
public:
    explicit TcpStubServer(StubConfig cfg) : handler_(std::move(cfg)) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = 0;
        REQUIRE(::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
        REQUIRE(::listen(listen_fd_, 1) == 0);
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        thread_ = std::thread([this] { serve(); });
    }
    ~TcpStubServer() {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        thread_.join();
    }
    int port() const { return port_; }

private:
    void serve() {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) return;
        std::string buf;
        char chunk[65536];
        while (true) {
            ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
            if (n <= 0) break;
            buf.append(chunk, static_cast<std::size_t>(n));
            std::size_t nl;
            while ((nl = buf.find('\n')) != std::string::npos) {
                auto reply = handler_.handle(std::string_view(buf).substr(0, nl)) + "\n";
                buf.erase(0, nl + 1);
                ::send(fd, reply.data(), reply.size(), MSG_NOSIGNAL);
            }
        }
        ::close(fd);
    }

    StubBackend handler_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::thread thread_;
};

std::vector<Payload> text_payloads(std::size_t n) {
    std::vector<Payload> v;
    for (std::size_t i = 0; i < n; ++i) v.emplace_back(TextPayload{"text " + std::to_string(i) + ". more. again. end."});
    return v;
}

std::vector<Payload> chunk_payloads(std::size_t n) {
    std::vector<Payload> v;
    for (std::size_t i = 0; i < n; ++i) {
        v.emplace_back(TranscribePayload{i, 16000, std::vector<float>(dsp::kChunkSamples, 0.0f)});
    }
    return v;
}

}  // namespace

TEST_CASE("base64 test vectors") {
    auto enc = [](std::string s) {
        return base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    };
    CHECK(enc("") == "");
    CHECK(enc("f") == "Zg==");
    CHECK(enc("fo") == "Zm8=");
    CHECK(enc("foo") == "Zm9v");
    CHECK(enc("foob") == "Zm9vYg==");
    CHECK(enc("foobar") == "Zm9vYmFy");
    auto dec = base64_decode("Zm9vYmE=");
    CHECK(std::string(dec.begin(), dec.end()) == "fooba");
    CHECK(error_code_of([] { base64_decode("Zm9"); }) == ErrorCode::protocol);
    CHECK(error_code_of([] { base64_decode("Zm9*"); }) == ErrorCode::protocol);
}

TEST_CASE("wire format is stable") {
    Request r{Op::classify, 7, TextPayload{"hi"}};
    CHECK(encode_request(r) == R"({"v":1,"id":7,"op":"classify","payload":{"text":"hi"}})");
    Response ok{7, true, ClassifyResult{1, 0.9}, ""};
    CHECK(encode_response(ok) == R"({"id":7,"ok":true,"result":{"label":1,"prob":0.9}})");
    Response bad{9, false, {}, "op unavailable"};
    CHECK(encode_response(bad) == R"({"id":9,"ok":false,"error":"op unavailable"})");

    // Little-endian float32: 1.0f is 00 00 80 3F.
    TranscribePayload p{2, 16000, std::vector<float>(dsp::kChunkSamples, 0.0f)};
    p.samples[0] = 1.0f;
    auto line = encode_request({Op::transcribe, 8, p});
    CHECK(line.rfind(R"({"v":1,"id":8,"op":"transcribe","payload":{"chunk_index":2,"sample_rate":16000,"samples":"AACAPwAA)", 0) == 0);
}

TEST_CASE("round trip on generated messages") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 300; ++i) {
        auto req = testutil::random_request(rng, 0.02);
        auto line = encode_request(req);
        REQUIRE(line.find('\n') == std::string::npos);
        REQUIRE(line.rfind("{\"v\":1,", 0) == 0);
        REQUIRE(decode_request(line) == req);

        auto resp = testutil::random_response(rng);
        auto rline = encode_response(resp);
        REQUIRE(rline.find('\n') == std::string::npos);
        REQUIRE(decode_response(rline) == resp);
    }
}

TEST_CASE("malformed lines name their defect") {
    for (const auto& bad : testutil::malformed_lines()) {
        CAPTURE(bad.line);
        auto msg = error_message_of([&] {
            if (bad.is_request) {
                decode_request(bad.line);
            } else {
                decode_response(bad.line);
            }
        });
        CHECK(msg.find("protocol error") != std::string::npos);
        CHECK(msg.find(bad.defect) != std::string::npos);
        CHECK(error_code_of([&] {
                  if (bad.is_request) {
                      decode_request(bad.line);
                  } else {
                      decode_response(bad.line);
                  }
              }) == ErrorCode::protocol);
    }
}

TEST_CASE("more response schema violations") {
    for (const char* line : {
             R"({"id":1,"ok":true})",
             R"({"id":1,"ok":"yes","result":{"text":""}})",
             R"({"id":1,"ok":true,"result":{"label":2,"prob":0.5}})",
             R"({"id":1,"ok":true,"result":{"label":1}})",
             R"({"id":1,"ok":true,"result":{}})",
             R"({"id":-5,"ok":true,"result":{"text":""}})",
             R"({"id":1,"ok":true,"result":{"text":""},"extra":0})",
             R"([1,2,3])",
         }) {
        CAPTURE(line);
        CHECK(error_code_of([&] { decode_response(line); }) == ErrorCode::protocol);
    }
    // id -1 is reserved for replies to unparseable requests.
    CHECK(decode_response(R"({"id":-1,"ok":false,"error":"x"})").id == -1);
}

TEST_CASE("error excerpt is truncated to 256 bytes") {
    std::string huge = "{\"id\":1,\"ok\":true,\"result\":{\"text\":\"" + std::string(10000, 'x') + "\"}";
    auto msg = error_message_of([&] { decode_response(huge); });
    auto pos = msg.find("line: ");
    REQUIRE(pos != std::string::npos);
    CHECK(msg.size() - pos - 6 <= kMaxErrorExcerpt + 3);
    CHECK(excerpt(std::string(10, 'a')) == std::string(10, 'a'));
    // never cut inside a multi-byte character
    std::string sinhala;
    for (int i = 0; i < 200; ++i) sinhala += "ශ";
    CHECK(text::is_valid_utf8(excerpt(sinhala).substr(0, excerpt(sinhala).size() - 3)));
}

TEST_CASE("encoder validates before sending") {
    Request r{Op::transcribe, 1, TranscribePayload{0, 16000, std::vector<float>(100)}};
    auto msg = error_message_of([&] { encode_request(r); });
    CHECK(msg.find("schema") != std::string::npos);
    CHECK(error_code_of([&] { encode_request(r); }) == ErrorCode::protocol);
    Request wrong{Op::classify, 1, TranscribePayload{}};
    CHECK(error_code_of([&] { encode_request(wrong); }) == ErrorCode::protocol);
}

TEST_CASE("stub backend behaviour") {
    StubBackend stub(StubConfig{1, 0.9, {}, false, true, true, true});
    auto chunk2 = decode_response(stub.handle(encode_request(
        {Op::transcribe, 4, TranscribePayload{2, 16000, std::vector<float>(dsp::kChunkSamples)}})));
    CHECK(chunk2 == Response{4, true, TextResult{"chunk-2"}, ""});

    auto cls = decode_response(stub.handle(encode_request({Op::classify, 5, TextPayload{"anything"}})));
    CHECK(cls == Response{5, true, ClassifyResult{1, 0.9}, ""});

    auto sum = decode_response(stub.handle(encode_request({Op::summarize, 6, TextPayload{"s1. s2. s3. s4."}})));
    CHECK(std::get<TextResult>(sum.result).text == "s1. s2. s3.");

    StubBackend only_classify(parse_stub_spec("stub:ops=classify"));
    auto na = decode_response(only_classify.handle(encode_request(
        {Op::transcribe, 9, TranscribePayload{0, 16000, std::vector<float>(dsp::kChunkSamples)}})));
    CHECK_FALSE(na.ok);
    CHECK(na.error == "op unavailable");
    CHECK(na.id == 9);

    auto garbage = decode_response(stub.handle("this is not json"));
    CHECK_FALSE(garbage.ok);
    CHECK(garbage.id == -1);

    auto echoed = decode_response(stub.handle(R"({"v":1,"id":12,"op":"dance","payload":{}})"));
    CHECK_FALSE(echoed.ok);
    CHECK(echoed.id == 12);
}

TEST_CASE("stub spec parsing") {
    auto c = parse_stub_spec("stub:label=1,prob=0.25,fail=1|3,reverse,ops=transcribe|summarize");
    CHECK(c.label == 1);
    CHECK(c.prob == 0.25);
    CHECK(c.failing_chunks == std::vector<std::size_t>{1, 3});
    CHECK(c.reverse_delivery);
    CHECK(c.transcribe);
    CHECK_FALSE(c.classify);
    CHECK(c.summarize);
    CHECK(parse_stub_spec("stub").classify);
    for (const char* bad : {"stub:label=2", "stub:prob=1.5", "stub:colour=red", "stubby", "stub:ops=fly"}) {
        CAPTURE(bad);
        CHECK(error_code_of([&] { parse_stub_spec(bad); }) == ErrorCode::config);
    }
    CHECK(error_code_of([] { connect("no-port-here"); }) == ErrorCode::config);
    CHECK(error_code_of([] { connect("localhost:99999"); }) == ErrorCode::config);
    CHECK(error_code_of([] { connect("stdio:"); }) == ErrorCode::config);
}

TEST_CASE("client: pipelining honours max_in_flight and matches out-of-order replies") {
    for (std::size_t limit : {1u, 2u, 4u, 16u}) {
        std::size_t peak = 0;
        auto stub = std::make_shared<StubBackend>(StubConfig{});
        Client client(std::make_unique<CountingTransport>(std::make_unique<LoopbackTransport>(stub, true), &peak),
                      limit);
        auto replies = client.call_batch(Op::transcribe, chunk_payloads(9));
        REQUIRE(replies.size() == 9);
        for (std::size_t i = 0; i < 9; ++i) CHECK(std::get<TextResult>(replies[i].result).text == "chunk-" + std::to_string(i));
        CHECK(peak == std::min<std::size_t>(limit, 9));
        CHECK(client.last_id() == 9);
    }
}

TEST_CASE("client: ids are unique per connection") {
    auto client = testutil::stub_client();
    client.call(Op::classify, TextPayload{"a"});
    client.call_batch(Op::summarize, text_payloads(5));
    CHECK(client.last_id() == 6);
}

TEST_CASE("client: protocol violations and closed streams") {
    Client stray(std::make_unique<ScriptedTransport>(std::vector<std::string>{R"({"id":77,"ok":true,"result":{"text":""}})"}));
    auto msg = error_message_of([&] { stray.call(Op::summarize, TextPayload{"x"}); });
    CHECK(msg.find("77") != std::string::npos);

    Client shape(std::make_unique<ScriptedTransport>(std::vector<std::string>{R"({"id":1,"ok":true,"result":{"text":"x"}})"}));
    CHECK(error_code_of([&] { shape.call(Op::classify, TextPayload{"x"}); }) == ErrorCode::protocol);

    Client junk(std::make_unique<ScriptedTransport>(std::vector<std::string>{"<html>"}));
    CHECK(error_code_of([&] { junk.call(Op::classify, TextPayload{"x"}); }) == ErrorCode::protocol);

    Client eof(std::make_unique<ScriptedTransport>(std::vector<std::string>{}));
    CHECK(error_code_of([&] { eof.call(Op::classify, TextPayload{"x"}); }) == ErrorCode::backend_unavailable);
}

TEST_CASE("stdio transport against the stub-server subcommand") {
    const std::string cmd = std::string("stdio:'") + AIP_BINARY + "' stub-server --spec 'stub:label=1,prob=0.75,fail=1'";
    Client client(connect(cmd), 3);
    auto replies = client.call_batch(Op::transcribe, chunk_payloads(4));
    CHECK(replies[0].ok);
    CHECK_FALSE(replies[1].ok);
    CHECK(std::get<TextResult>(replies[3].result).text == "chunk-3");
    auto cls = client.call(Op::classify, TextPayload{"x"});
    CHECK(std::get<ClassifyResult>(cls.result) == ClassifyResult{1, 0.75});
}

TEST_CASE("stdio transport: a backend that exits is unavailable") {
    Client client(connect("stdio:exit 0"));
    CHECK(error_code_of([&] { client.call(Op::classify, TextPayload{"x"}); }) == ErrorCode::backend_unavailable);
}

TEST_CASE("tcp transport") {
    TcpStubServer server(StubConfig{0, 0.125, {}, false, true, true, true});
    Client client(connect("127.0.0.1:" + std::to_string(server.port())), 4);
    auto replies = client.call_batch(Op::transcribe, chunk_payloads(3));
    CHECK(std::get<TextResult>(replies[2].result).text == "chunk-2");
    auto cls = client.call(Op::classify, TextPayload{"x"});
    CHECK(std::get<ClassifyResult>(cls.result) == ClassifyResult{0, 0.125});
}

TEST_CASE("tcp transport: refused connection is unavailable") {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    const int port = ntohs(addr.sin_port);
    ::close(fd);
    CHECK(error_code_of([&] { connect("127.0.0.1:" + std::to_string(port)); }) == ErrorCode::backend_unavailable);
}

TEST_CASE("serve_lines answers one line per request") {
    std::istringstream in(encode_request({Op::classify, 1, TextPayload{"x"}}) + "\n\n" +
                          encode_request({Op::summarize, 2, TextPayload{"a. b."}}) + "\n");
    std::ostringstream out;
    StubBackend stub;
    serve_lines(in, out, stub);
    std::istringstream lines(out.str());
    std::string l1, l2, l3;
    std::getline(lines, l1);
    std::getline(lines, l2);
    CHECK(decode_response(l1).id == 1);
    CHECK(decode_response(l2).id == 2);
    CHECK_FALSE(std::getline(lines, l3));
}
