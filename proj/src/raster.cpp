#include "acqlayout/raster.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <iterator>
#include <vector>

#include "acqlayout/fingerprint.hpp"

namespace acqlayout {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic{'A', 'P', 'A', 'T'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderSize = 32;

template <typename T>
void put_le(std::vector<unsigned char>& out, T v) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  const U bits = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

std::size_t element_size(DType t) { return t == DType::U16 ? 2 : 4; }

}  // namespace

double quantize(double v, DType dtype) {
  if (dtype == DType::F32) return static_cast<double>(static_cast<float>(v));
  if (std::isnan(v)) return 0.0;
  const double r = v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5);
  return std::clamp(r, 0.0, 65535.0);
}

std::string raster_checksum(const PatchRaster& raster) {
  Fingerprint fp;
  fp.value(raster.width).value(raster.height).value(raster.bands);
  fp.value(static_cast<int>(raster.dtype)).value(raster.nodata_value);
  const auto& v = raster.values;
  for (Eigen::Index i = 0; i < v.size(); ++i) fp.value(v.data()[i]);
  return fp.hex();
}

void write_raster(const PatchRaster& raster, const fs::path& file) {
  if (raster.width <= 0 || raster.height <= 0 || raster.bands <= 0 ||
      raster.values.rows() != raster.pixel_count() || raster.values.cols() != raster.bands)
    throw Error(ErrorCode::DimensionMismatch, "raster '" + raster.patch_id + "' has inconsistent shape");

  std::vector<unsigned char> buf;
  buf.reserve(kHeaderSize + static_cast<std::size_t>(raster.values.size()) * element_size(raster.dtype));
  buf.insert(buf.end(), kMagic.begin(), kMagic.end());
  put_le<std::uint16_t>(buf, kVersion);
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(raster.dtype));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(raster.width));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(raster.height));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(raster.bands));
  put_le<std::uint32_t>(buf, 0u);  // reserved
  put_le<double>(buf, raster.nodata_value);

  // values() is row-major, so data() is already pixel-major, band-interleaved
  const double* data = raster.values.data();
  for (Eigen::Index i = 0; i < raster.values.size(); ++i) {
    const double v = data[i];
    if (raster.dtype == DType::U16) {
      if (!(v >= 0.0 && v <= 65535.0 && v == std::floor(v)))
        throw Error(ErrorCode::InvalidValue, "value " + std::to_string(v) + " is not representable as u16");
      put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(v));
    } else {
      const float f = static_cast<float>(v);
      if (!std::isnan(v) && static_cast<double>(f) != v)
        throw Error(ErrorCode::InvalidValue, "value " + std::to_string(v) + " is not representable as f32");
      put_le<float>(buf, f);
    }
  }

  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + file.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + file.string());
}

PatchRaster read_raster(const fs::path& file, std::string patch_id) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingPatch, file.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderSize || !std::equal(kMagic.begin(), kMagic.end(), buf.begin()))
    throw Error(ErrorCode::CorruptHeader, file.string() + ": bad magic or short header");

  const auto version = get_le<std::uint16_t>(&buf[4]);
  const auto dtype_code = get_le<std::uint16_t>(&buf[6]);
  const auto width = get_le<std::uint32_t>(&buf[8]);
  const auto height = get_le<std::uint32_t>(&buf[12]);
  const auto bands = get_le<std::uint32_t>(&buf[16]);
  const auto nodata = get_le<double>(&buf[24]);
  if (version != kVersion) throw Error(ErrorCode::CorruptHeader, file.string() + ": unsupported version");
  if (dtype_code > 1) throw Error(ErrorCode::CorruptHeader, file.string() + ": unknown dtype code");
  if (width == 0 || height == 0 || bands == 0 || width > 1u << 16 || height > 1u << 16 || bands > 1024)
    throw Error(ErrorCode::CorruptHeader, file.string() + ": implausible dimensions");

  const auto dtype = static_cast<DType>(dtype_code);
  const std::size_t n = std::size_t(width) * height * bands;
  if (buf.size() != kHeaderSize + n * element_size(dtype))
    throw Error(ErrorCode::CorruptHeader, file.string() + ": payload size does not match header");

  if (patch_id.empty()) patch_id = file.stem().string();
  PatchRaster r(std::move(patch_id), int(width), int(height), int(bands), dtype, nodata);
  double* data = r.values.data();
  const unsigned char* p = buf.data() + kHeaderSize;
  for (std::size_t i = 0; i < n; ++i) {
    if (dtype == DType::U16) {
      data[i] = get_le<std::uint16_t>(p + 2 * i);
    } else {
      data[i] = get_le<float>(p + 4 * i);
    }
  }
  return r;
}

fs::path raster_path(const fs::path& store, std::string_view patch_id) {
  return store / (std::string(patch_id) + ".apat");
}

void store_raster(const PatchRaster& raster, const fs::path& store) {
  fs::create_directories(store);
  write_raster(raster, raster_path(store, raster.patch_id));
}

PatchRaster load_raster(std::string_view patch_id, const fs::path& store) {
  const auto path = raster_path(store, patch_id);
  if (!fs::exists(path)) throw Error(ErrorCode::MissingPatch, std::string(patch_id));
  return read_raster(path, std::string(patch_id));
}

}  // namespace acqlayout
