#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace selfie {

enum class ErrorCode {
    dimension_mismatch,
    invalid_argument,
    corrupt_header,
    kind_mismatch,
    truncated_tensor,
    io_failure,
    unsupported,
    out_of_range,
    degenerate_vector,
    missing_label,
    unknown_id,
    placeholder_not_found,
    empty_input,
    non_finite,
    oracle_failure,
    config_error,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so
// callers (and the CLI's error.json) can distinguish them without parsing text.
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

}  // namespace selfie
