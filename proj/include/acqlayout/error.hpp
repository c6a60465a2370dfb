#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace acqlayout {

enum class ErrorCode {
  MissingFile,
  MalformedRow,
  DuplicatePatchId,
  DimensionMismatch,
  InvalidValue,
  MissingPatch,
  CorruptHeader,
  SyntaxError,
  NoReferenceItem,
  DuplicateItemName,
  InvalidRange,
  InfeasibleLayout,
  BadFractions,
  IoError,
  DegenerateInterval,
  MissingBinding,
  MissingPrediction,
  MissingReference,
  EmptyOverlap,
  NegativeMse,
  PatchTooSmall,
  BadSpec,
  FingerprintMismatch,
};

std::string_view to_string(ErrorCode code);

/// Every library failure surfaces as an Error carrying a category code; the
/// message holds the detail (line number, offending id, field name).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace acqlayout
