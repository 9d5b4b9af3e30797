#include "geval/error.hpp"

namespace geval {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::CapacityExceeded: return "CapacityExceeded";
        case ErrorCode::TimeOrder: return "TimeOrder";
        case ErrorCode::LatticeMismatch: return "LatticeMismatch";
        case ErrorCode::RequiresPathTree: return "RequiresPathTree";
        case ErrorCode::NotAStoppingTime: return "NotAStoppingTime";
        case ErrorCode::StoppingOrder: return "StoppingOrder";
        case ErrorCode::NotMeasurable: return "NotMeasurable";
        case ErrorCode::StepTooLarge: return "StepTooLarge";
        case ErrorCode::MonotonicityViolated: return "MonotonicityViolated";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::UnknownBuiltin: return "UnknownBuiltin";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::DegenerateGrid: return "DegenerateGrid";
        case ErrorCode::BadPartition: return "BadPartition";
        case ErrorCode::NotSupermartingale: return "NotSupermartingale";
        case ErrorCode::RootBracketFailure: return "RootBracketFailure";
        case ErrorCode::ExtractInconsistent: return "ExtractInconsistent";
        case ErrorCode::BadLevels: return "BadLevels";
        case ErrorCode::AxiomsFailed: return "AxiomsFailed";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::InvalidClaim: return "InvalidClaim";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::StepTooLarge:
        case ErrorCode::MonotonicityViolated:
        case ErrorCode::NoConvergence:
        case ErrorCode::RootBracketFailure:
        case ErrorCode::CapacityExceeded:
            return true;
        default:
            return false;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace geval
