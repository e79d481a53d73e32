#include "negadapt/error.hpp"

namespace negadapt {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::NumericalError: return "NumericalError";
        case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
        case ErrorCode::MissingEmbedding: return "MissingEmbedding";
        case ErrorCode::MissingNegation: return "MissingNegation";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::NoValidRows: return "NoValidRows";
        case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
        case ErrorCode::CannotNegate: return "CannotNegate";
        case ErrorCode::MalformedGroup: return "MalformedGroup";
        case ErrorCode::TrainSizeTooLarge: return "TrainSizeTooLarge";
        case ErrorCode::ProviderError: return "ProviderError";
        case ErrorCode::InconsistentDimensions: return "InconsistentDimensions";
        case ErrorCode::RetriesExhausted: return "RetriesExhausted";
        case ErrorCode::CacheCorruption: return "CacheCorruption";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::VersionUnsupported: return "VersionUnsupported";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::InvalidPValue: return "InvalidPValue";
    }
    return "Unknown";
}

}  // namespace negadapt
