#include "aip/error.hpp"

namespace aip {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse: return "parse";
        case ErrorCode::validation: return "validation";
        case ErrorCode::unsupported_format: return "unsupported_format";
        case ErrorCode::corrupt_file: return "corrupt_file";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::source_unavailable: return "source_unavailable";
        case ErrorCode::contract: return "contract";
        case ErrorCode::undefined_reference: return "undefined_reference";
        case ErrorCode::degenerate_corpus: return "degenerate_corpus";
        case ErrorCode::backend_unavailable: return "backend_unavailable";
        case ErrorCode::protocol: return "protocol";
        case ErrorCode::config: return "config";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace aip
