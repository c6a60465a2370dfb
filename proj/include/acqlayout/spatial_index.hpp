#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acqlayout/kdtree.hpp"
#include "acqlayout/patch.hpp"
#include "acqlayout/rtree.hpp"

namespace acqlayout {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// An S2 record together with the duration to its closest valid S1
/// acquisition at the same location (+inf when there is none).
struct IndexedPatch {
  PatchStat stat;
  double sar_gap_seconds = kInfinity;

  bool operator==(const IndexedPatch&) const = default;
};

/// Closed interval [lo, hi].
struct Interval {
  double lo = -kInfinity;
  double hi = kInfinity;

  bool contains(double v) const { return lo <= v && v <= hi; }
};

/// Box over the four indexed dimensions. Time bounds are absolute timestamps.
struct BoxQuery {
  Interval cloud{0.0, 1.0};
  Interval time{-kInfinity, kInfinity};
  Interval sar_gap{0.0, kInfinity};
  Interval valid{0.0, 1.0};

  bool contains(const IndexedPatch& p) const;
};

struct SarMatch {
  std::string patch_id;
  std::int64_t timestamp = 0;
  double gap_seconds = 0.0;

  bool operator==(const SarMatch&) const = default;
};

/// Per-location R-Trees over (cloud, time, SAR gap, valid) for S2 patches and
/// per-location 1-D Kd-Trees over valid S1 timestamps. Built once, immutable,
/// safe to query from many threads.
class PatchIndex {
 public:
  PatchIndex() = default;

  static PatchIndex build(std::vector<PatchStat> records, double sar_validity_threshold = 1.0);

  /// Exactly the S2 records of `location` inside `box`, sorted by timestamp
  /// then patch_id. Unknown locations yield an empty list.
  std::vector<IndexedPatch> box_query(const PatchKey& location, const BoxQuery& box) const;

  /// Closest valid S1 acquisition to `t`; ties go to the earlier acquisition,
  /// then to the smaller patch_id.
  std::optional<SarMatch> nearest_sar(const PatchKey& location, std::int64_t t) const;

  /// Every location holding at least one record, in key order.
  std::vector<PatchKey> locations() const;
  std::vector<IndexedPatch> s2_patches(const PatchKey& location) const;

  std::span<const PatchStat> records() const { return records_; }
  std::size_t s2_count() const { return indexed_.size(); }
  double sar_validity_threshold() const { return sar_threshold_; }
  const std::string& fingerprint() const { return fingerprint_; }

  /// Versioned binary persistence. Loading rebuilds the trees from the stored
  /// records and checks the fingerprint.
  void save(const std::filesystem::path& file) const;
  static PatchIndex load(const std::filesystem::path& file);

 private:
  struct SarKey {
    std::int64_t timestamp;
    std::string patch_id;
  };
  struct SarTieLess {
    bool operator()(const SarKey& a, const SarKey& b) const;
  };

  struct Location {
    RTree<double, 4, std::uint32_t> s2_tree;  // values index indexed_
    KdTree<double, 1, SarKey, SarTieLess, Chebyshev> s1_tree;
    std::vector<std::uint32_t> s2_members;
  };

  std::vector<PatchStat> records_;  // sorted by patch_id
  std::vector<IndexedPatch> indexed_;
  std::map<PatchKey, Location> locations_;
  double sar_threshold_ = 1.0;
  std::string fingerprint_;
};

std::string records_fingerprint(std::span<const PatchStat> records, double sar_validity_threshold);

inline PatchIndex build_index(std::vector<PatchStat> records, double validity_threshold_for_sar = 1.0) {
  return PatchIndex::build(std::move(records), validity_threshold_for_sar);
}

inline std::vector<IndexedPatch> box_query(const PatchIndex& index, const PatchKey& location, const BoxQuery& box) {
  return index.box_query(location, box);
}

inline std::optional<SarMatch> nearest_sar(const PatchIndex& index, const PatchKey& location, std::int64_t t) {
  return index.nearest_sar(location, t);
}

}  // namespace acqlayout
