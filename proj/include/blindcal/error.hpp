#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blindcal {

/// Machine-readable failure categories. The CLI reports these as `error_code`
/// strings and maps them onto process exit codes.
enum class ErrorCode {
    NotHermitian,
    SparsityTooLarge,
    NonPositiveDiagonal,
    VanishingSubdiagonal,
    SingularSystem,
    InsufficientPeaks,
    ZeroInitialVector,
    StepUnderflow,
    ZeroTrueGain,
    BadK,
    DimensionMismatch,
    InvalidConfig,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::SparsityTooLarge: return "SparsityTooLarge";
    case ErrorCode::NonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorCode::VanishingSubdiagonal: return "VanishingSubdiagonal";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InsufficientPeaks: return "InsufficientPeaks";
    case ErrorCode::ZeroInitialVector: return "ZeroInitialVector";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::ZeroTrueGain: return "ZeroTrueGain";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace blindcal
