#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geval {

enum class ErrorCode {
    InvalidSpec,
    CapacityExceeded,
    TimeOrder,
    LatticeMismatch,
    RequiresPathTree,
    NotAStoppingTime,
    StoppingOrder,
    NotMeasurable,
    StepTooLarge,
    MonotonicityViolated,
    NoConvergence,
    UnknownBuiltin,
    BadParams,
    DegenerateGrid,
    BadPartition,
    NotSupermartingale,
    RootBracketFailure,
    ExtractInconsistent,
    BadLevels,
    AxiomsFailed,
    ParseError,
    UnknownIdentifier,
    ArityMismatch,
    InvalidClaim,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for codes that signal a numerical breakdown rather than bad input.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace geval
