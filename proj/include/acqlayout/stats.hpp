#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "acqlayout/patch.hpp"

namespace acqlayout {

/// Histogram of the duration from each S2 acquisition to its nearest valid
/// S1 acquisition at the same location.
struct GapHistogram {
  double bin_seconds = 12 * 3600.0;
  std::vector<std::size_t> counts;  // bin i covers [i, i+1) * bin_seconds
  std::size_t finite = 0;           // S2 records with some valid S1
  std::size_t without_sar = 0;      // S2 records with none
  std::vector<double> gaps;         // finite gaps, ascending

  /// Share of finite gaps that are <= `seconds`.
  double fraction_within(double seconds) const;
};

/// Nearest valid-S1 gap of every S2 record (+inf when none), in record order.
std::vector<double> nearest_sar_gaps(std::span<const PatchStat> records, double sar_validity_threshold = 1.0);

GapHistogram gap_histogram(std::span<const PatchStat> records, double bin_hours = 12.0,
                           double sar_validity_threshold = 1.0);

/// Per-location mean cloud-free share of S2 acquisitions, with a histogram
/// of those values over [0, 1] and their global mean and standard deviation.
struct CoverageMap {
  std::map<PatchKey, double> clear_fraction;
  std::vector<std::size_t> histogram;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

CoverageMap coverage_map(std::span<const PatchStat> records, int bins = 20);

}  // namespace acqlayout
