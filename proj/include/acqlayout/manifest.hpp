#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acqlayout/sampler.hpp"

namespace acqlayout {

inline constexpr int kManifestFormatVersion = 1;

struct ManifestHeader {
  int format_version = kManifestFormatVersion;
  std::string layout_name;
  std::string layout_fingerprint;
  std::string index_fingerprint;
  std::optional<std::uint64_t> seed;
  std::string reference_item;
  std::string target_item;

  bool operator==(const ManifestHeader&) const = default;
};

struct ManifestRecord {
  Sample sample;
  std::optional<Split> split;

  bool operator==(const ManifestRecord&) const = default;
};

/// JSON-lines sample manifest: a header object, then one object per sample.
struct Manifest {
  ManifestHeader header;
  std::vector<ManifestRecord> records;

  bool operator==(const Manifest&) const = default;
};

ManifestHeader make_manifest_header(const AcquisitionsLayout& layout, const PatchIndex& index,
                                    std::optional<std::uint64_t> seed);

Manifest make_manifest(ManifestHeader header, std::span<const Sample> samples, std::optional<Split> split);

std::string manifest_text(const Manifest& manifest);
std::string manifest_fingerprint(const Manifest& manifest);

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest parse_manifest(std::istream& in);
Manifest read_manifest(const std::filesystem::path& path);

/// Builds and writes the manifest in one step; returns what was written.
Manifest emit_manifest(std::span<const Sample> samples, std::optional<Split> split, const std::filesystem::path& path,
                       ManifestHeader header);

}  // namespace acqlayout
