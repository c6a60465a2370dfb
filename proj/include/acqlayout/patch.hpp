#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace acqlayout {

/// Default side length of a patch, in pixels.
inline constexpr int kDefaultPatchSize = 256;

enum class Sensor : std::uint8_t { S1, S2 };

std::string_view to_string(Sensor s);
std::optional<Sensor> parse_sensor(std::string_view s);

/// A cell of the non-overlapping patch grid of a tile.
struct PatchKey {
  std::string tile_id;
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  auto operator<=>(const PatchKey&) const = default;
  bool operator==(const PatchKey&) const = default;
};

std::string to_string(const PatchKey& key);

/// Metadata of one patch acquisition. `cloud_fraction` is set for S2 only.
struct PatchStat {
  PatchKey key;
  Sensor sensor = Sensor::S2;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  std::optional<double> cloud_fraction;
  double valid_fraction = 1.0;
  std::string patch_id;

  bool operator==(const PatchStat&) const = default;
};

}  // namespace acqlayout
