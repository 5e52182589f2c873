#include "recourse/common/error.hpp"

namespace recourse {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSchema: return "InvalidSchema";
    case ErrorCode::kUnknownColumn: return "UnknownColumn";
    case ErrorCode::kOutOfDomainValue: return "OutOfDomainValue";
    case ErrorCode::kMissingValue: return "MissingValue";
    case ErrorCode::kDegenerateDomain: return "DegenerateDomain";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kPreconditionViolated: return "PreconditionViolated";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptArtifact: return "CorruptArtifact";
    case ErrorCode::kInvalidCausalModel: return "InvalidCausalModel";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kNoActionableFeatures: return "NoActionableFeatures";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kNotEnumerable: return "NotEnumerable";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNoNegativeDatapoints: return "NoNegativeDatapoints";
    case ErrorCode::kFingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::kInvalidPath: return "InvalidPath";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kArtifactMismatch: return "ArtifactMismatch";
    case ErrorCode::kDisallowedAction: return "DisallowedAction";
  }
  return "Unknown";
}

}  // namespace recourse
