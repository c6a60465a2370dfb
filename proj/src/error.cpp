#include "acqlayout/error.hpp"

namespace acqlayout {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicatePatchId: return "DuplicatePatchId";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::MissingPatch: return "MissingPatch";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::NoReferenceItem: return "NoReferenceItem";
    case ErrorCode::DuplicateItemName: return "DuplicateItemName";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::InfeasibleLayout: return "InfeasibleLayout";
    case ErrorCode::BadFractions: return "BadFractions";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DegenerateInterval: return "DegenerateInterval";
    case ErrorCode::MissingBinding: return "MissingBinding";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::MissingReference: return "MissingReference";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::NegativeMse: return "NegativeMse";
    case ErrorCode::PatchTooSmall: return "PatchTooSmall";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace acqlayout
