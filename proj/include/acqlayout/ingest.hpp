#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acqlayout/error.hpp"
#include "acqlayout/patch.hpp"
#include "acqlayout/raster.hpp"

namespace acqlayout {

/// Describes the metadata CSV dialect. The default matches the archive format:
/// `patch_id,tile_id,row,col,sensor,timestamp_utc,cloud_fraction,valid_fraction`.
struct MetadataSchema {
  char delimiter = ',';
  /// Accept `YYYY-MM-DDTHH:MM:SSZ` in the timestamp column besides integer seconds.
  bool allow_iso8601 = true;
};

inline constexpr const char* kMetadataHeader =
    "patch_id,tile_id,row,col,sensor,timestamp_utc,cloud_fraction,valid_fraction";

/// Reads the whole file; any malformed row rejects the file (MalformedRow with
/// its 1-based line number), as does a repeated patch_id.
std::vector<PatchStat> ingest_metadata(const std::filesystem::path& path, const MetadataSchema& schema = {});
std::vector<PatchStat> parse_metadata(std::istream& in, const MetadataSchema& schema = {});

void write_metadata(std::ostream& out, std::span<const PatchStat> records);
void write_metadata(const std::filesystem::path& path, std::span<const PatchStat> records);

/// Labels of the upstream cloud quality mask.
enum class CloudLabel : std::uint8_t { Clear = 0, Cloud = 1, CloudShadow = 2, NoData = 3 };

using CloudMask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// (cloud + shadow pixels) / (pixels that are not no-data); 1.0 when nothing
/// is valid.
template <typename Derived>
double cloud_fraction_from_mask(const Eigen::DenseBase<Derived>& mask, Eigen::Index patch_size = kDefaultPatchSize) {
  if (mask.rows() != patch_size || mask.cols() != patch_size)
    throw Error(ErrorCode::DimensionMismatch, "mask is " + std::to_string(mask.rows()) + "x" +
                                                  std::to_string(mask.cols()) + ", expected " +
                                                  std::to_string(patch_size) + "x" + std::to_string(patch_size));
  std::int64_t cloudy = 0;
  std::int64_t valid = 0;
  for (Eigen::Index c = 0; c < mask.cols(); ++c) {
    for (Eigen::Index r = 0; r < mask.rows(); ++r) {
      const auto label = static_cast<int>(mask(r, c));
      switch (label) {
        case int(CloudLabel::Clear): ++valid; break;
        case int(CloudLabel::Cloud):
        case int(CloudLabel::CloudShadow): ++valid; ++cloudy; break;
        case int(CloudLabel::NoData): break;
        default: throw Error(ErrorCode::InvalidValue, "unknown cloud label " + std::to_string(label));
      }
    }
  }
  if (valid == 0) return 1.0;
  return static_cast<double>(cloudy) / static_cast<double>(valid);
}

/// Fraction of pixel positions where every band differs from no-data.
double valid_fraction_from_raster(const PatchRaster& raster);

/// Masks are persisted as single-band u16 rasters holding the labels.
PatchRaster mask_to_raster(const CloudMask& mask, std::string patch_id);
CloudMask raster_to_mask(const PatchRaster& raster);

}  // namespace acqlayout
