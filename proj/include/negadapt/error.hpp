#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace negadapt {

enum class ErrorCode {
    DimensionMismatch,
    NonFiniteInput,
    ZeroVector,
    NumericalError,
    EmptyTrainingSet,
    MissingEmbedding,
    MissingNegation,
    InvalidArgument,
    FileNotFound,
    IoError,
    NoValidRows,
    ScoreOutOfRange,
    CannotNegate,
    MalformedGroup,
    TrainSizeTooLarge,
    ProviderError,
    InconsistentDimensions,
    RetriesExhausted,
    CacheCorruption,
    FormatError,
    VersionUnsupported,
    DegenerateInput,
    LengthMismatch,
    InvalidPValue,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace negadapt
