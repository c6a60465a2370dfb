#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "acqlayout/error.hpp"
#include "acqlayout/manifest.hpp"
#include "acqlayout/raster.hpp"

namespace acqlayout {

/// Temporal position of `t` between two acquisitions: 0 at `t_before`, 1 at
/// `t_after`. Integer differences keep it invariant to shifting all three.
inline double interpolation_ratio(std::int64_t t_before, std::int64_t t_after, std::int64_t t) {
  if (t_before == t_after) throw Error(ErrorCode::DegenerateInterval, "t_before == t_after");
  return double(t - t_before) / double(t_after - t_before);
}

/// before + (after - before) * ratio, elementwise, as an Eigen expression.
/// Exact at ratio 0 and 1.
template <typename DerivedA, typename DerivedB>
auto interpolate(const Eigen::ArrayBase<DerivedA>& before, const Eigen::ArrayBase<DerivedB>& after, double ratio) {
  using Scalar = typename DerivedA::Scalar;
  return before.binaryExpr(after, [ratio](Scalar a, Scalar b) { return std::lerp(a, b, Scalar(ratio)); });
}

/// Unquantized linear gap-filling. Pixels that are no-data in either input
/// come out as NaN.
PatchRaster::Pixels gapfill_values(const PatchRaster& s2_before, const PatchRaster& s2_after, std::int64_t t_before,
                                   std::int64_t t_after, std::int64_t t);

struct GapfillOutput {
  PatchRaster raster;
  bool extrapolated = false;  // t outside [t_before, t_after]
};

/// Linear gap-filling emitted at the storage precision of `s2_before`
/// (round half away from zero for integer rasters). No-data in either input
/// propagates as the output's no-data value.
GapfillOutput gapfill_linear(const PatchRaster& s2_before, const PatchRaster& s2_after, std::int64_t t_before,
                             std::int64_t t_after, std::int64_t t, std::string patch_id = {});

enum class Backend { GapfillLinear, External };

std::string_view to_string(Backend b);
std::optional<Backend> parse_backend(std::string_view s);

struct BackendOptions {
  std::string before_item = "t-1";
  std::string after_item = "t+1";
  /// Directory of `<sample_id>.apat` predictions, for the external backend.
  std::optional<std::filesystem::path> external_predictions;
  unsigned jobs = 1;
};

struct RunSummary {
  std::string backend;
  std::string manifest_fingerprint;
  std::size_t sample_count = 0;
  std::vector<std::string> warnings;
};

/// Writes one prediction per manifest record to
/// `<output_root>/<backend>/<sample_id>.apat` plus `run_summary.json` there.
/// Throws MissingBinding (gapfill) or MissingPrediction (external).
RunSummary run_backend(Backend backend, const Manifest& manifest, const std::filesystem::path& raster_store,
                       const std::filesystem::path& output_root, const BackendOptions& options = {});

std::filesystem::path backend_output_dir(const std::filesystem::path& output_root, Backend backend);

}  // namespace acqlayout
