#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace recourse {

enum class ErrorCode {
  kInvalidSchema,
  kUnknownColumn,
  kOutOfDomainValue,
  kMissingValue,
  kDegenerateDomain,
  kEmptySplit,
  kPreconditionViolated,
  kDivergedLoss,
  kDimensionMismatch,
  kVersionMismatch,
  kCorruptArtifact,
  kInvalidCausalModel,
  kSchemaMismatch,
  kNoActionableFeatures,
  kEmptyReference,
  kNotEnumerable,
  kLengthMismatch,
  kNoNegativeDatapoints,
  kFingerprintMismatch,
  kInvalidPath,
  kEmptyInput,
  kConfigError,
  kArtifactMismatch,
  kDisallowedAction,
};

// Stable machine-readable name, e.g. "OutOfDomainValue".
std::string_view error_code_name(ErrorCode code);

// Single exception type for the library. `field` names the offending
// feature/column/key when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const { return code_; }
  const std::string& field() const { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace recourse
