#pragma once

#include <span>
#include <string>
#include <vector>

#include "acqlayout/layout.hpp"
#include "acqlayout/manifest.hpp"
#include "acqlayout/patch.hpp"

namespace acqlayout {

struct ValidationIssue {
  std::size_t record = 0;  // 0-based index into manifest.records
  std::string sample_id;
  std::string message;
};

/// Re-checks every manifest record against the raw metadata records with
/// plain linear scans (no index): bindings exist and are S2 acquisitions of
/// the sample location, cloud/valid/time constraints hold, SAR pairs are the
/// nearest valid S1 acquisition within the allowed gap, and the degenerate
/// flag is accurate. Returns one entry per violated constraint.
std::vector<ValidationIssue> validate_manifest(const Manifest& manifest, const AcquisitionsLayout& layout,
                                               std::span<const PatchStat> records,
                                               double sar_validity_threshold = 1.0);

}  // namespace acqlayout
