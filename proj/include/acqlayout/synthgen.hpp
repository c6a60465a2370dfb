#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acqlayout/ingest.hpp"
#include "acqlayout/patch.hpp"
#include "acqlayout/raster.hpp"

namespace acqlayout {

enum class TrendModel { Constant, Linear, SeasonalSine };

std::string_view to_string(TrendModel m);
std::optional<TrendModel> parse_trend_model(std::string_view s);

/// Parameters of a synthetic S1/S2 archive. Everything generated is a pure
/// function of this struct.
struct SynthSpec {
  int n_tiles = 2;
  int grid_rows = 3;
  int grid_cols = 3;
  std::int64_t start = 1483228800;  // 2017-01-01T00:00:00Z
  std::int64_t end = 1483228800 + 120 * 86400;
  std::int64_t s2_revisit = 5 * 86400;
  std::int64_t s1_revisit = 6 * 86400;
  std::int64_t s1_phase = 0;
  /// Mean cloud fraction of an unplanted S2 acquisition.
  double cloud_probability = 0.4;
  TrendModel trend = TrendModel::SeasonalSine;
  int patch_size = 64;
  std::uint64_t seed = 0;
  /// Force, at every location, one acquisition pattern that satisfies each
  /// built-in layout: clean images 15 days before and after an overcast
  /// reference, plus a clean image one revisit after it.
  bool plant_layouts = true;
  /// Add a step change to the clean radiometry of half of every patch just
  /// before the planted reference date.
  bool sudden_change = false;
  /// Probability that an unplanted acquisition loses a stripe of columns to no-data.
  double partial_valid_probability = 0.0;
  bool write_rasters = true;
  unsigned jobs = 1;

  void validate() const;
};

/// Generator-side tallies, each matching a class of item constraints.
struct SynthCounts {
  std::size_t s1_total = 0;
  std::size_t s2_total = 0;
  std::size_t s2_valid = 0;              // valid fraction == 1
  std::size_t s2_clear = 0;              // valid, cloud == 0
  std::size_t s2_overcast = 0;           // valid, cloud == 1
  std::size_t s2_sar72 = 0;              // valid, nearest valid S1 within 72 h
  std::size_t s2_clear_sar72 = 0;
  std::size_t s2_overcast_sar72 = 0;

  SynthCounts& operator+=(const SynthCounts& o);
  bool operator==(const SynthCounts&) const = default;
};

struct LocationTruth {
  PatchKey key;
  std::optional<std::int64_t> planted_reference;
  std::optional<std::int64_t> change_time;
  double clear_fraction = 0.0;  // mean over S2 acquisitions of (1 - cloud)
  SynthCounts counts;
};

struct SynthTruth {
  SynthSpec spec;
  std::vector<PatchStat> records;  // per location: S2 by time, then S1 by time
  std::vector<LocationTruth> locations;
  std::map<std::string, std::string> raster_checksums;  // patch_id -> checksum
  SynthCounts totals;
  double mean_cloud_fraction = 0.0;  // over all S2 acquisitions
};

/// S2 acquisition times and S1 acquisition times of a SynthSpec.
std::vector<std::int64_t> s2_schedule(const SynthSpec& spec);
std::vector<std::int64_t> s1_schedule(const SynthSpec& spec);

std::string synth_tile_id(int tile);

/// Builds the archive in memory (rasters and masks are generated but not kept).
SynthTruth simulate(const SynthSpec& spec);

/// Writes `metadata.csv`, `rasters/`, `masks/` and `truth.json` under `out_dir`.
SynthTruth generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// Cloud-free S2 radiometry of a location at any time (the generator truth),
/// quantized to u16.
PatchRaster clean_raster(const SynthSpec& spec, const PatchKey& key, std::int64_t t, std::string patch_id = {});

void write_truth_json(const std::filesystem::path& file, const SynthTruth& truth);

}  // namespace acqlayout
