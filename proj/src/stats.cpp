#include "acqlayout/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "acqlayout/spatial_index.hpp"

namespace acqlayout {

double GapHistogram::fraction_within(double seconds) const {
  if (gaps.empty()) return 0.0;
  const auto n = std::upper_bound(gaps.begin(), gaps.end(), seconds) - gaps.begin();
  return double(n) / double(gaps.size());
}

std::vector<double> nearest_sar_gaps(std::span<const PatchStat> records, double sar_validity_threshold) {
  const PatchIndex index = PatchIndex::build({records.begin(), records.end()}, sar_validity_threshold);
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.sensor != Sensor::S2) continue;
    const auto m = index.nearest_sar(r.key, r.timestamp);
    out.push_back(m ? m->gap_seconds : kInfinity);
  }
  return out;
}

GapHistogram gap_histogram(std::span<const PatchStat> records, double bin_hours, double sar_validity_threshold) {
  GapHistogram h;
  h.bin_seconds = bin_hours * 3600.0;
  for (double g : nearest_sar_gaps(records, sar_validity_threshold)) {
    if (!std::isfinite(g)) {
      ++h.without_sar;
      continue;
    }
    const auto bin = static_cast<std::size_t>(std::floor(g / h.bin_seconds));
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
    ++h.finite;
    h.gaps.push_back(g);
  }
  std::sort(h.gaps.begin(), h.gaps.end());
  return h;
}

CoverageMap coverage_map(std::span<const PatchStat> records, int bins) {
  CoverageMap m;
  std::map<PatchKey, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (r.sensor != Sensor::S2) continue;
    auto& [sum, n] = acc[r.key];
    sum += 1.0 - r.cloud_fraction.value_or(0.0);
    ++n;
  }
  m.histogram.assign(static_cast<std::size_t>(std::max(bins, 1)), 0);
  for (const auto& [key, sn] : acc) {
    const double v = sn.first / double(sn.second);
    m.clear_fraction[key] = v;
    auto bin = static_cast<std::size_t>(std::floor(v * double(m.histogram.size())));
    ++m.histogram[std::min(bin, m.histogram.size() - 1)];
  }
  if (!m.clear_fraction.empty()) {
    double sum = 0.0;
    for (const auto& [k, v] : m.clear_fraction) sum += v;
    m.mean = sum / double(m.clear_fraction.size());
    double var = 0.0;
    for (const auto& [k, v] : m.clear_fraction) var += (v - m.mean) * (v - m.mean);
    m.stddev = std::sqrt(var / double(m.clear_fraction.size()));
  }
  return m;
}

}  // namespace acqlayout
