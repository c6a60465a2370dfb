#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "acqlayout/error.hpp"

namespace acqlayout {

/// Storage type of a raster on disk.
enum class DType : std::uint16_t { U16 = 0, F32 = 1 };

/// A multi-band patch. Pixels are stored row-major, band-interleaved: one
/// Eigen row per pixel (index y * width + x), one column per band, which is
/// exactly the on-disk payload order.
template <typename Scalar>
struct BasicRaster {
  using Pixels = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::string patch_id;
  int width = 0;
  int height = 0;
  int bands = 0;
  DType dtype = DType::U16;
  double nodata_value = 0.0;
  Pixels values;

  BasicRaster() = default;
  BasicRaster(std::string id, int w, int h, int b, DType type, double nodata, Scalar fill = Scalar(0))
      : patch_id(std::move(id)), width(w), height(h), bands(b), dtype(type), nodata_value(nodata),
        values(Pixels::Constant(Eigen::Index(w) * h, b, fill)) {}

  Eigen::Index pixel_count() const { return Eigen::Index(width) * height; }
  Eigen::Index pixel_index(int x, int y) const { return Eigen::Index(y) * width + x; }

  Scalar& at(int x, int y, int band) { return values(pixel_index(x, y), band); }
  Scalar at(int x, int y, int band) const { return values(pixel_index(x, y), band); }

  bool is_nodata(Scalar v) const {
    if (std::isnan(nodata_value)) return std::isnan(static_cast<double>(v));
    return static_cast<double>(v) == nodata_value;
  }

  /// A pixel is valid when every band differs from the no-data value.
  bool pixel_valid(Eigen::Index p) const {
    for (int b = 0; b < bands; ++b)
      if (is_nodata(values(p, b))) return false;
    return true;
  }

  /// Copy of one band as a height x width image.
  Plane plane(int band) const {
    Plane out(height, width);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out(y, x) = values(pixel_index(x, y), band);
    return out;
  }

  bool same_shape(const BasicRaster& o) const {
    return width == o.width && height == o.height && bands == o.bands;
  }

  bool operator==(const BasicRaster& o) const {
    return patch_id == o.patch_id && same_shape(o) && dtype == o.dtype &&
           (nodata_value == o.nodata_value || (std::isnan(nodata_value) && std::isnan(o.nodata_value))) &&
           (values == o.values).all();
  }
};

using PatchRaster = BasicRaster<double>;

/// Rounds half away from zero and clamps to the storage range of `dtype`.
double quantize(double v, DType dtype);

/// Fingerprint of header fields and payload.
std::string raster_checksum(const PatchRaster& raster);

/// Portable patch format: 32-byte little-endian header ("APAT", version,
/// dtype, width, height, bands, reserved, nodata f64) then the payload.
void write_raster(const PatchRaster& raster, const std::filesystem::path& file);
PatchRaster read_raster(const std::filesystem::path& file, std::string patch_id = {});

std::filesystem::path raster_path(const std::filesystem::path& store, std::string_view patch_id);
void store_raster(const PatchRaster& raster, const std::filesystem::path& store);
/// Throws MissingPatch when `<store>/<patch_id>.apat` does not exist.
PatchRaster load_raster(std::string_view patch_id, const std::filesystem::path& store);

}  // namespace acqlayout
