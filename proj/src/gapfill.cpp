#include "acqlayout/gapfill.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "acqlayout/parallel.hpp"

namespace acqlayout {

namespace fs = std::filesystem;

namespace {

void check_pair(const PatchRaster& a, const PatchRaster& b) {
  if (!a.same_shape(b))
    throw Error(ErrorCode::DimensionMismatch, "'" + a.patch_id + "' and '" + b.patch_id + "' differ in shape");
}

}  // namespace

PatchRaster::Pixels gapfill_values(const PatchRaster& s2_before, const PatchRaster& s2_after, std::int64_t t_before,
                                   std::int64_t t_after, std::int64_t t) {
  check_pair(s2_before, s2_after);
  const double ratio = interpolation_ratio(t_before, t_after, t);
  PatchRaster::Pixels out = interpolate(s2_before.values, s2_after.values, ratio);
  for (Eigen::Index p = 0; p < out.rows(); ++p)
    if (!s2_before.pixel_valid(p) || !s2_after.pixel_valid(p))
      out.row(p).setConstant(std::numeric_limits<double>::quiet_NaN());
  return out;
}

GapfillOutput gapfill_linear(const PatchRaster& s2_before, const PatchRaster& s2_after, std::int64_t t_before,
                             std::int64_t t_after, std::int64_t t, std::string patch_id) {
  const auto values = gapfill_values(s2_before, s2_after, t_before, t_after, t);
  GapfillOutput out;
  out.extrapolated = t < std::min(t_before, t_after) || t > std::max(t_before, t_after);
  out.raster = PatchRaster(std::move(patch_id), s2_before.width, s2_before.height, s2_before.bands, s2_before.dtype,
                           s2_before.nodata_value);
  out.raster.values = values.unaryExpr([&](double v) {
    return std::isnan(v) ? s2_before.nodata_value : quantize(v, s2_before.dtype);
  });
  return out;
}

std::string_view to_string(Backend b) { return b == Backend::GapfillLinear ? "gapfill_linear" : "external"; }

std::optional<Backend> parse_backend(std::string_view s) {
  if (s == "gapfill_linear" || s == "gapfill") return Backend::GapfillLinear;
  if (s == "external") return Backend::External;
  return std::nullopt;
}

fs::path backend_output_dir(const fs::path& output_root, Backend backend) {
  return output_root / std::string(to_string(backend));
}

RunSummary run_backend(Backend backend, const Manifest& manifest, const fs::path& raster_store,
                       const fs::path& output_root, const BackendOptions& options) {
  RunSummary summary;
  summary.backend = std::string(to_string(backend));
  summary.manifest_fingerprint = manifest_fingerprint(manifest);
  summary.sample_count = manifest.records.size();

  // check requirements up front so nothing is written for an unusable manifest
  if (backend == Backend::GapfillLinear) {
    for (const auto& r : manifest.records) {
      for (const auto* item : {&options.before_item, &options.after_item})
        if (!r.sample.bindings.contains(*item)) throw Error(ErrorCode::MissingBinding, *item);
    }
  } else {
    if (!options.external_predictions) throw Error(ErrorCode::MissingPrediction, "no external prediction directory");
    for (const auto& r : manifest.records) {
      const auto id = r.sample.id();
      if (!fs::exists(raster_path(*options.external_predictions, id))) throw Error(ErrorCode::MissingPrediction, id);
    }
  }

  const fs::path out_dir = backend_output_dir(output_root, backend);
  fs::create_directories(out_dir);
  const std::string& ref_item = manifest.header.reference_item;

  std::vector<std::string> warnings(manifest.records.size());
  parallel_for(manifest.records.size(), options.jobs, [&](std::size_t i) {
    const Sample& s = manifest.records[i].sample;
    const std::string id = s.id();
    if (backend == Backend::GapfillLinear) {
      const ResolvedItem& before = s.bindings.at(options.before_item);
      const ResolvedItem& after = s.bindings.at(options.after_item);
      const auto t_it = s.bindings.find(ref_item);
      const std::int64_t t = t_it != s.bindings.end() ? t_it->second.s2_timestamp : s.reference_time;
      const PatchRaster a = load_raster(before.s2_patch_id, raster_store);
      const PatchRaster b = load_raster(after.s2_patch_id, raster_store);
      GapfillOutput g = gapfill_linear(a, b, before.s2_timestamp, after.s2_timestamp, t, id);
      if (g.extrapolated) warnings[i] = id + ": reference time outside the interpolation interval";
      store_raster(g.raster, out_dir);
    } else {
      PatchRaster p = load_raster(id, *options.external_predictions);
      const auto t_it = s.bindings.find(manifest.header.target_item);
      if (t_it != s.bindings.end()) {
        const auto ref_path = raster_path(raster_store, t_it->second.s2_patch_id);
        if (fs::exists(ref_path)) {
          const PatchRaster ref = read_raster(ref_path);
          if (!p.same_shape(ref))
            throw Error(ErrorCode::DimensionMismatch, "external prediction " + id + " does not match target shape");
        }
      }
      store_raster(p, out_dir);
    }
  });
  for (auto& w : warnings) {
    if (w.empty()) continue;
    spdlog::warn("{}", w);
    summary.warnings.push_back(std::move(w));
  }

  nlohmann::json j;
  j["backend"] = summary.backend;
  j["manifest_fingerprint"] = summary.manifest_fingerprint;
  j["sample_count"] = summary.sample_count;
  j["warnings"] = summary.warnings;
  std::ofstream out(out_dir / "run_summary.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write run summary");
  out << j.dump(2) << '\n';
  return summary;
}

}  // namespace acqlayout
