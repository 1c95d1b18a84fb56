#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace genbound {

enum class ErrorCode {
    MissingArm,
    DegenerateArm,
    NotSimulated,
    RankDeficient,
    InputInconsistent,
    EmptyArmInStratum,
    ZeroWidthBaseline,
    ZeroVariance,
    SubpopulationTooSmall,
    NotPositiveDefinite,
    InsufficientEligible,
    OddSampleSize,
    ReplicateFailure,
    InvalidData,
    SchemaError,
    ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingArm: return "MissingArm";
        case ErrorCode::DegenerateArm: return "DegenerateArm";
        case ErrorCode::NotSimulated: return "NotSimulated";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::InputInconsistent: return "InputInconsistent";
        case ErrorCode::EmptyArmInStratum: return "EmptyArmInStratum";
        case ErrorCode::ZeroWidthBaseline: return "ZeroWidthBaseline";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::SubpopulationTooSmall: return "SubpopulationTooSmall";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::InsufficientEligible: return "InsufficientEligible";
        case ErrorCode::OddSampleSize: return "OddSampleSize";
        case ErrorCode::ReplicateFailure: return "ReplicateFailure";
        case ErrorCode::InvalidData: return "InvalidData";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

// Validation errors (bad input files, configs, flags) vs computation errors.
constexpr bool is_validation_error(ErrorCode code) noexcept {
    return code == ErrorCode::SchemaError || code == ErrorCode::ConfigError ||
           code == ErrorCode::InvalidData;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace genbound
