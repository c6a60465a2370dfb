#include "acqlayout/ingest.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

namespace acqlayout {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_iso8601(std::string_view s, std::int64_t& out) {
  // YYYY-MM-DDTHH:MM:SSZ
  if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':' || s[19] != 'Z')
    return false;
  int y, mo, d, h, mi, se;
  if (!parse_number(s.substr(0, 4), y) || !parse_number(s.substr(5, 2), mo) || !parse_number(s.substr(8, 2), d) ||
      !parse_number(s.substr(11, 2), h) || !parse_number(s.substr(14, 2), mi) || !parse_number(s.substr(17, 2), se))
    return false;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) return false;
  out = sys_days{ymd}.time_since_epoch() / seconds{1} + h * 3600 + mi * 60 + se;
  return true;
}

[[noreturn]] void malformed(std::size_t line, const std::string& reason) {
  throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + ": " + reason);
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<PatchStat> parse_metadata(std::istream& in, const MetadataSchema& schema) {
  std::vector<PatchStat> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;

  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto fields = split(view, schema.delimiter);

    if (!header_seen) {
      const auto expected = split(kMetadataHeader, ',');
      if (fields != expected) malformed(line_no, "header does not match the metadata format");
      header_seen = true;
      continue;
    }
    if (fields.size() != 8) malformed(line_no, "expected 8 fields, got " + std::to_string(fields.size()));

    PatchStat rec;
    rec.patch_id = std::string(fields[0]);
    rec.key.tile_id = std::string(fields[1]);
    if (rec.patch_id.empty()) malformed(line_no, "empty patch_id");
    if (rec.key.tile_id.empty()) malformed(line_no, "empty tile_id");
    if (!parse_number(fields[2], rec.key.row)) malformed(line_no, "row is not a non-negative integer");
    if (!parse_number(fields[3], rec.key.col)) malformed(line_no, "col is not a non-negative integer");

    const auto sensor = parse_sensor(fields[4]);
    if (!sensor) malformed(line_no, "sensor must be S1 or S2");
    rec.sensor = *sensor;

    if (!parse_number(fields[5], rec.timestamp) &&
        !(schema.allow_iso8601 && parse_iso8601(fields[5], rec.timestamp)))
      malformed(line_no, "bad timestamp '" + std::string(fields[5]) + "'");

    if (rec.sensor == Sensor::S1) {
      if (!fields[6].empty()) malformed(line_no, "cloud_fraction must be empty for S1");
    } else {
      double cloud;
      if (!parse_number(fields[6], cloud)) malformed(line_no, "cloud_fraction required for S2");
      if (!(cloud >= 0.0 && cloud <= 1.0)) malformed(line_no, "cloud_fraction outside [0,1]");
      rec.cloud_fraction = cloud;
    }
    if (!parse_number(fields[7], rec.valid_fraction) || !(rec.valid_fraction >= 0.0 && rec.valid_fraction <= 1.0))
      malformed(line_no, "valid_fraction must be a real in [0,1]");

    if (!seen.insert(rec.patch_id).second) throw Error(ErrorCode::DuplicatePatchId, rec.patch_id);
    records.push_back(std::move(rec));
  }
  if (!header_seen) malformed(line_no + 1, "missing header");
  return records;
}

std::vector<PatchStat> ingest_metadata(const fs::path& path, const MetadataSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return parse_metadata(in, schema);
}

void write_metadata(std::ostream& out, std::span<const PatchStat> records) {
  out << kMetadataHeader << '\n';
  for (const auto& r : records) {
    out << r.patch_id << ',' << r.key.tile_id << ',' << r.key.row << ',' << r.key.col << ',' << to_string(r.sensor)
        << ',' << r.timestamp << ',' << (r.cloud_fraction ? format_double(*r.cloud_fraction) : std::string{}) << ','
        << format_double(r.valid_fraction) << '\n';
  }
}

void write_metadata(const fs::path& path, std::span<const PatchStat> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_metadata(out, records);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

double valid_fraction_from_raster(const PatchRaster& raster) {
  if (raster.values.rows() != raster.pixel_count() || raster.values.cols() != raster.bands || raster.pixel_count() == 0)
    throw Error(ErrorCode::DimensionMismatch, "malformed raster '" + raster.patch_id + "'");
  Eigen::Index valid = 0;
  for (Eigen::Index p = 0; p < raster.pixel_count(); ++p) valid += raster.pixel_valid(p) ? 1 : 0;
  return static_cast<double>(valid) / static_cast<double>(raster.pixel_count());
}

PatchRaster mask_to_raster(const CloudMask& mask, std::string patch_id) {
  PatchRaster r(std::move(patch_id), int(mask.cols()), int(mask.rows()), 1, DType::U16,
                std::numeric_limits<std::uint16_t>::max());
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) r.at(x, y, 0) = mask(y, x);
  return r;
}

CloudMask raster_to_mask(const PatchRaster& raster) {
  if (raster.bands != 1) throw Error(ErrorCode::DimensionMismatch, "cloud mask must have a single band");
  CloudMask mask(raster.height, raster.width);
  for (int y = 0; y < raster.height; ++y)
    for (int x = 0; x < raster.width; ++x) {
      const double v = raster.at(x, y, 0);
      if (v < 0 || v > 3) throw Error(ErrorCode::InvalidValue, "unknown cloud label in " + raster.patch_id);
      mask(y, x) = static_cast<std::uint8_t>(v);
    }
  return mask;
}

}  // namespace acqlayout
