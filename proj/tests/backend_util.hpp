#pragma once

#include <functional>
#include <memory>

#include "aip/backend_protocol.hpp"

namespace testutil {

class FnHandler final : public aip::backend::LineHandler {
public:
    explicit FnHandler(std::function<std::string(std::string_view)> fn) : fn_(std::move(fn)) {}
    std::string handle(std::string_view line) override { return fn_(line); }

private:
    std::function<std::string(std::string_view)> fn_;
};

inline aip::backend::Client stub_client(aip::backend::StubConfig config = {}, std::size_t max_in_flight = 4) {
    const bool reverse = config.reverse_delivery;
    auto handler = std::make_shared<aip::backend::StubBackend>(std::move(config));
    return aip::backend::Client(std::make_unique<aip::backend::LoopbackTransport>(handler, reverse), max_in_flight);
}

inline aip::backend::Client fn_client(std::function<std::string(std::string_view)> fn) {
    auto handler = std::make_shared<FnHandler>(std::move(fn));
    return aip::backend::Client(std::make_unique<aip::backend::LoopbackTransport>(handler));
}

// Answers every request with `result` (a JSON object literal) under the request's id.
inline aip::backend::Client fixed_result_client(std::string result) {
    return fn_client([result](std::string_view line) {
        auto req = aip::backend::decode_request(line);
        return "{\"id\":" + std::to_string(req.id) + ",\"ok\":true,\"result\":" + result + "}";
    });
}

}  // namespace testutil
