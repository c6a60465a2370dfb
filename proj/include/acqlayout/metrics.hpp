#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acqlayout/error.hpp"
#include "acqlayout/manifest.hpp"
#include "acqlayout/raster.hpp"

namespace acqlayout {

struct MetricsConfig {
  double peak = 10000.0;  // d: full scale of S2 reflectance integers
  int ssim_window = 11;
  double ssim_sigma = 1.5;
  double ssim_k1 = 0.01;
  double ssim_k2 = 0.03;
  double sam_epsilon = 1e-9;

  void validate() const;
};

// ---------------------------------------------------------------- array level
//
// `pred`/`ref` are pixels x bands arrays; `mask` is a per-pixel 0/1 column.

template <typename DP, typename DR, typename DM>
double masked_mse(const Eigen::ArrayBase<DP>& pred, const Eigen::ArrayBase<DR>& ref, const Eigen::ArrayBase<DM>& mask) {
  const double count = mask.template cast<double>().sum() * double(pred.cols());
  if (count == 0.0) throw Error(ErrorCode::EmptyOverlap, "no unmasked pixel");
  const auto sq = (pred.template cast<double>() - ref.template cast<double>()).square().rowwise().sum();
  return (sq * mask.template cast<double>()).sum() / count;
}

/// Mean spectral angle over masked pixels whose band vectors both have norm
/// at least `epsilon`.
template <typename DP, typename DR, typename DM>
double masked_sam(const Eigen::ArrayBase<DP>& pred, const Eigen::ArrayBase<DR>& ref, const Eigen::ArrayBase<DM>& mask,
                  double epsilon) {
  double total = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index p = 0; p < pred.rows(); ++p) {
    if (!mask(p)) continue;
    const auto a = pred.row(p).template cast<double>().matrix();
    const auto b = ref.row(p).template cast<double>().matrix();
    const double na = a.norm();
    const double nb = b.norm();
    if (na < epsilon || nb < epsilon) continue;
    // arccos of the normalized dot product, in its 2 atan2(|u - v|, |u + v|) form
    const Eigen::VectorXd u = a / na;
    const Eigen::VectorXd v = b / nb;
    total += 2.0 * std::atan2((u - v).norm(), (u + v).norm());
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::EmptyOverlap, "no pixel with a usable spectrum");
  return total / double(used);
}

/// Normalized 1-D Gaussian of odd length `size`.
Eigen::ArrayXd gaussian_kernel(int size, double sigma);

/// Separable 2-D correlation without padding: output is
/// (rows - k + 1) x (cols - k + 1).
Eigen::ArrayXXd filter_valid(const Eigen::ArrayXXd& image, const Eigen::ArrayXd& kernel);

/// SSIM of two single-band images (rows x cols), Gaussian-weighted windows,
/// valid region only, averaged over window positions.
template <typename DX, typename DY>
double ssim_plane(const Eigen::ArrayBase<DX>& x_in, const Eigen::ArrayBase<DY>& y_in, const MetricsConfig& cfg) {
  const Eigen::ArrayXXd x = x_in.template cast<double>();
  const Eigen::ArrayXXd y = y_in.template cast<double>();
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw Error(ErrorCode::DimensionMismatch, "SSIM planes differ");
  if (x.rows() < cfg.ssim_window || x.cols() < cfg.ssim_window)
    throw Error(ErrorCode::PatchTooSmall, "patch smaller than the SSIM window");

  const Eigen::ArrayXd k = gaussian_kernel(cfg.ssim_window, cfg.ssim_sigma);
  const double c1 = (cfg.ssim_k1 * cfg.peak) * (cfg.ssim_k1 * cfg.peak);
  const double c2 = (cfg.ssim_k2 * cfg.peak) * (cfg.ssim_k2 * cfg.peak);

  const Eigen::ArrayXXd mx = filter_valid(x, k);
  const Eigen::ArrayXXd my = filter_valid(y, k);
  const Eigen::ArrayXXd sxx = filter_valid(x * x, k) - mx * mx;
  const Eigen::ArrayXXd syy = filter_valid(y * y, k) - my * my;
  const Eigen::ArrayXXd sxy = filter_valid(x * y, k) - mx * my;

  const Eigen::ArrayXXd num = (2.0 * mx * my + c1) * (2.0 * sxy + c2);
  const Eigen::ArrayXXd den = (mx * mx + my * my + c1) * (sxx + syy + c2);
  return (num / den).mean();
}

// ---------------------------------------------------------------- raster level

/// Pixels valid in both rasters.
Eigen::Array<bool, Eigen::Dynamic, 1> joint_valid_mask(const PatchRaster& a, const PatchRaster& b);

double mse(const PatchRaster& pred, const PatchRaster& ref);
/// 10 log10(d^2 / mse); +inf for a zero MSE. Throws NegativeMse.
double psnr(double mse_value, const MetricsConfig& cfg = {});
double sam(const PatchRaster& pred, const PatchRaster& ref, const MetricsConfig& cfg = {});
/// Mean over bands of the per-band SSIM.
double ssim(const PatchRaster& pred, const PatchRaster& ref, const MetricsConfig& cfg = {});

// ---------------------------------------------------------------- reports

struct MetricsRow {
  std::string sample_id;
  double mse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double sam_rad = 0.0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::size_t n = 0;
  double mse = 0.0;      // mean of per-sample MSE
  double psnr_db = 0.0;  // from the aggregate MSE, not a mean of PSNRs
  double ssim = 0.0;
  double sam_rad = 0.0;
  MetricsConfig config;
};

MetricsRow evaluate_pair(std::string sample_id, const PatchRaster& pred, const PatchRaster& ref,
                         const MetricsConfig& cfg);

/// Aggregates rows in their given order.
MetricsReport aggregate(std::vector<MetricsRow> rows, const MetricsConfig& cfg);

/// Scores `<prediction_dir>/<sample_id>.apat` against the target item's
/// raster from `reference_store` for every manifest record.
/// Throws MissingPrediction / MissingReference.
MetricsReport evaluate(const Manifest& manifest, const std::filesystem::path& prediction_dir,
                       const std::filesystem::path& reference_store, const MetricsConfig& cfg = {}, unsigned jobs = 1);

void write_report_csv(const std::filesystem::path& file, const MetricsReport& report);
void write_report_json(const std::filesystem::path& file, const MetricsReport& report);
std::string report_csv(const MetricsReport& report);
std::string report_json(const MetricsReport& report);

}  // namespace acqlayout
