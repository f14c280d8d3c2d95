#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thistle {

enum class ErrorCode {
    dimension_mismatch,
    zero_vector,
    non_finite,
    duplicate_id,
    empty_id,
    empty_index,
    unknown_id,
    invalid_argument,
    invalid_config,
    parse_error,
    io_error,
    snapshot_version,
    snapshot_truncated,
    snapshot_checksum,
    snapshot_corrupt,
    sidecar_error,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::zero_vector: return "zero_vector";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::duplicate_id: return "duplicate_id";
    case ErrorCode::empty_id: return "empty_id";
    case ErrorCode::empty_index: return "empty_index";
    case ErrorCode::unknown_id: return "unknown_id";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::snapshot_version: return "snapshot_version";
    case ErrorCode::snapshot_truncated: return "snapshot_truncated";
    case ErrorCode::snapshot_checksum: return "snapshot_checksum";
    case ErrorCode::snapshot_corrupt: return "snapshot_corrupt";
    case ErrorCode::sidecar_error: return "sidecar_error";
    }
    return "unknown";
}

/// Every failure raised by the library carries a stable machine-readable code.
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

} // namespace thistle
