#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "acqlayout/layout.hpp"
#include "acqlayout/patch.hpp"
#include "acqlayout/spatial_index.hpp"

namespace acqlayout {

/// The acquisition bound to one layout item.
struct ResolvedItem {
  std::string s2_patch_id;
  std::int64_t s2_timestamp = 0;
  double s2_cloud_fraction = 0.0;
  std::optional<std::string> s1_patch_id;
  std::optional<double> s1_gap_seconds;

  bool operator==(const ResolvedItem&) const = default;
};

struct Sample {
  PatchKey location;
  std::int64_t reference_time = 0;
  std::map<std::string, ResolvedItem> bindings;  // item name -> acquisition
  /// Set when one S2 acquisition is bound to more than one item.
  bool degenerate = false;

  /// Stable identifier derived from location, reference time and bindings.
  std::string id() const;

  bool operator==(const Sample&) const = default;
};

using Region = std::set<PatchKey>;

/// Enumerates every sample of `layout` in `index`, restricted to `region`
/// when given. Order: location, reference time, then the per-item candidate
/// order (timestamp, patch_id) in layout item order. `jobs` > 1 resolves
/// locations in parallel; the result does not depend on it.
std::vector<Sample> resolve_samples(const AcquisitionsLayout& layout, const PatchIndex& index,
                                    const std::optional<Region>& region = std::nullopt, unsigned jobs = 1);

/// Streaming form: `sink` receives the samples in the same order.
void for_each_sample(const AcquisitionsLayout& layout, const PatchIndex& index, const std::optional<Region>& region,
                     const std::function<void(Sample&&)>& sink);

enum class Split { Train, Val, Test };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct SplitFractions {
  double train = 0.80;
  double val = 0.05;
  double test = 0.15;

  bool operator==(const SplitFractions&) const = default;
};

/// Parses "0.8,0.05,0.15".
SplitFractions parse_fractions(std::string_view text);

struct SplitAssignment {
  std::map<PatchKey, Split> assignment;
  SplitFractions fractions;
  std::uint64_t seed = 0;

  Split at(const PatchKey& key) const;
  Region region(Split split) const;
  std::size_t count(Split split) const;

  bool operator==(const SplitAssignment&) const = default;
};

/// Each location draws its split from a seeded hash of its key, so the
/// result is independent of input order. Throws BadFractions.
SplitAssignment split_geographic(std::span<const PatchKey> locations, const SplitFractions& fractions,
                                 std::uint64_t seed);

void write_split(const std::filesystem::path& file, const SplitAssignment& split);
SplitAssignment read_split(const std::filesystem::path& file);

/// Keeps at most `cap` samples per location: a seeded uniform subsample of
/// that location's samples, in their original relative order.
std::vector<Sample> cap_per_location(std::vector<Sample> samples, std::size_t cap, std::uint64_t seed);

}  // namespace acqlayout
