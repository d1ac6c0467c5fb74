#include "selfie/error.hpp"

namespace selfie {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::corrupt_header: return "corrupt_header";
        case ErrorCode::kind_mismatch: return "kind_mismatch";
        case ErrorCode::truncated_tensor: return "truncated_tensor";
        case ErrorCode::io_failure: return "io_failure";
        case ErrorCode::unsupported: return "unsupported";
        case ErrorCode::out_of_range: return "out_of_range";
        case ErrorCode::degenerate_vector: return "degenerate_vector";
        case ErrorCode::missing_label: return "missing_label";
        case ErrorCode::unknown_id: return "unknown_id";
        case ErrorCode::placeholder_not_found: return "placeholder_not_found";
        case ErrorCode::empty_input: return "empty_input";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::oracle_failure: return "oracle_failure";
        case ErrorCode::config_error: return "config_error";
    }
    return "unknown";
}

}  // namespace selfie
