#include "acqlayout/manifest.hpp"

#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "acqlayout/error.hpp"
#include "acqlayout/fingerprint.hpp"

namespace acqlayout {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json header_json(const ManifestHeader& h) {
  json j;
  j["format_version"] = h.format_version;
  j["layout_name"] = h.layout_name;
  j["layout_fingerprint"] = h.layout_fingerprint;
  j["index_fingerprint"] = h.index_fingerprint;
  j["seed"] = h.seed ? json(*h.seed) : json(nullptr);
  j["reference_item"] = h.reference_item;
  j["target_item"] = h.target_item;
  return j;
}

json record_json(const ManifestRecord& r, const std::string& layout_name) {
  const Sample& s = r.sample;
  json j;
  j["layout_name"] = layout_name;
  j["split"] = r.split ? json(std::string(to_string(*r.split))) : json(nullptr);
  j["sample_id"] = s.id();
  j["location"] = {{"tile", s.location.tile_id}, {"row", s.location.row}, {"col", s.location.col}};
  j["reference_time"] = s.reference_time;
  j["degenerate"] = s.degenerate;
  json bindings = json::object();
  for (const auto& [name, b] : s.bindings) {
    json item = {{"s2_id", b.s2_patch_id}, {"s2_time", b.s2_timestamp}, {"s2_cloud", b.s2_cloud_fraction}};
    if (b.s1_patch_id) item["s1_id"] = *b.s1_patch_id;
    if (b.s1_gap_seconds) item["s1_gap_s"] = *b.s1_gap_seconds;
    bindings[name] = std::move(item);
  }
  j["bindings"] = std::move(bindings);
  return j;
}

[[noreturn]] void bad_line(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::MalformedRow, "manifest line " + std::to_string(line) + ": " + why);
}

}  // namespace

ManifestHeader make_manifest_header(const AcquisitionsLayout& layout, const PatchIndex& index,
                                    std::optional<std::uint64_t> seed) {
  ManifestHeader h;
  h.layout_name = layout.name;
  h.layout_fingerprint = layout_fingerprint(layout);
  h.index_fingerprint = index.fingerprint();
  h.seed = seed;
  h.reference_item = layout.reference().name;
  h.target_item = layout.target().name;
  return h;
}

Manifest make_manifest(ManifestHeader header, std::span<const Sample> samples, std::optional<Split> split) {
  Manifest m;
  m.header = std::move(header);
  m.records.reserve(samples.size());
  for (const auto& s : samples) m.records.push_back({s, split});
  return m;
}

std::string manifest_text(const Manifest& manifest) {
  std::string out = header_json(manifest.header).dump() + "\n";
  for (const auto& r : manifest.records) out += record_json(r, manifest.header.layout_name).dump() + "\n";
  return out;
}

std::string manifest_fingerprint(const Manifest& manifest) {
  return Fingerprint().text("acqlayout-manifest").text(manifest_text(manifest)).hex();
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << manifest_text(manifest);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

Manifest parse_manifest(std::istream& in) {
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      bad_line(line_no, e.what());
    }
    try {
      if (!have_header) {
        ManifestHeader& h = m.header;
        h.format_version = j.at("format_version").get<int>();
        if (h.format_version != kManifestFormatVersion) bad_line(line_no, "unsupported format_version");
        h.layout_name = j.at("layout_name").get<std::string>();
        h.layout_fingerprint = j.at("layout_fingerprint").get<std::string>();
        h.index_fingerprint = j.at("index_fingerprint").get<std::string>();
        if (!j.at("seed").is_null()) h.seed = j.at("seed").get<std::uint64_t>();
        h.reference_item = j.at("reference_item").get<std::string>();
        h.target_item = j.at("target_item").get<std::string>();
        have_header = true;
        continue;
      }
      ManifestRecord r;
      if (!j.at("split").is_null()) {
        r.split = parse_split(j.at("split").get<std::string>());
        if (!r.split) bad_line(line_no, "unknown split");
      }
      Sample& s = r.sample;
      const auto& loc = j.at("location");
      s.location = {loc.at("tile").get<std::string>(), loc.at("row").get<std::uint32_t>(),
                    loc.at("col").get<std::uint32_t>()};
      s.reference_time = j.at("reference_time").get<std::int64_t>();
      s.degenerate = j.at("degenerate").get<bool>();
      for (const auto& [name, b] : j.at("bindings").items()) {
        ResolvedItem item;
        item.s2_patch_id = b.at("s2_id").get<std::string>();
        item.s2_timestamp = b.at("s2_time").get<std::int64_t>();
        item.s2_cloud_fraction = b.at("s2_cloud").get<double>();
        if (b.contains("s1_id")) item.s1_patch_id = b.at("s1_id").get<std::string>();
        if (b.contains("s1_gap_s")) item.s1_gap_seconds = b.at("s1_gap_s").get<double>();
        s.bindings.emplace(name, std::move(item));
      }
      if (j.at("sample_id").get<std::string>() != s.id()) bad_line(line_no, "sample_id does not match its content");
      m.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      bad_line(line_no, e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::MalformedRow, "manifest has no header line");
  return m;
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return parse_manifest(in);
}

Manifest emit_manifest(std::span<const Sample> samples, std::optional<Split> split, const fs::path& path,
                       ManifestHeader header) {
  Manifest m = make_manifest(std::move(header), samples, split);
  write_manifest(path, m);
  return m;
}

}  // namespace acqlayout
