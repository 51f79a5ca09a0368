#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aip {

enum class ErrorCode {
    parse,
    validation,
    unsupported_format,
    corrupt_file,
    not_found,
    source_unavailable,
    contract,
    undefined_reference,
    degenerate_corpus,
    backend_unavailable,
    protocol,
    config,
    io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace aip
