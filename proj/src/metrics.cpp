#include "acqlayout/metrics.hpp"

#include <charconv>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "acqlayout/parallel.hpp"

namespace acqlayout {

namespace fs = std::filesystem;

void MetricsConfig::validate() const {
  if (!(peak > 0.0)) throw Error(ErrorCode::InvalidValue, "peak value must be positive");
  if (ssim_window < 3 || ssim_window % 2 == 0) throw Error(ErrorCode::InvalidValue, "SSIM window must be odd and >= 3");
  if (!(ssim_sigma > 0.0)) throw Error(ErrorCode::InvalidValue, "SSIM sigma must be positive");
  if (!(ssim_k1 > 0.0) || !(ssim_k2 > 0.0)) throw Error(ErrorCode::InvalidValue, "SSIM constants must be positive");
  if (!(sam_epsilon > 0.0)) throw Error(ErrorCode::InvalidValue, "SAM epsilon must be positive");
}

Eigen::ArrayXd gaussian_kernel(int size, double sigma) {
  Eigen::ArrayXd k(size);
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) k(i) = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
  return k / k.sum();
}

Eigen::ArrayXXd filter_valid(const Eigen::ArrayXXd& image, const Eigen::ArrayXd& kernel) {
  const Eigen::Index n = kernel.size();
  const Eigen::Index rows = image.rows() - n + 1;
  const Eigen::Index cols = image.cols() - n + 1;
  Eigen::ArrayXXd horizontal = Eigen::ArrayXXd::Zero(image.rows(), cols);
  for (Eigen::Index i = 0; i < n; ++i) horizontal += kernel(i) * image.middleCols(i, cols);
  Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(rows, cols);
  for (Eigen::Index i = 0; i < n; ++i) out += kernel(i) * horizontal.middleRows(i, rows);
  return out;
}

Eigen::Array<bool, Eigen::Dynamic, 1> joint_valid_mask(const PatchRaster& a, const PatchRaster& b) {
  Eigen::Array<bool, Eigen::Dynamic, 1> m(a.pixel_count());
  for (Eigen::Index p = 0; p < a.pixel_count(); ++p) m(p) = a.pixel_valid(p) && b.pixel_valid(p);
  return m;
}

namespace {
void check_shapes(const PatchRaster& a, const PatchRaster& b) {
  if (!a.same_shape(b))
    throw Error(ErrorCode::DimensionMismatch, "'" + a.patch_id + "' and '" + b.patch_id + "' differ in shape");
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(fmt_double(v)); }
}  // namespace

double mse(const PatchRaster& pred, const PatchRaster& ref) {
  check_shapes(pred, ref);
  return masked_mse(pred.values, ref.values, joint_valid_mask(pred, ref));
}

double psnr(double mse_value, const MetricsConfig& cfg) {
  if (mse_value < 0.0 || std::isnan(mse_value)) throw Error(ErrorCode::NegativeMse, std::to_string(mse_value));
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(cfg.peak * cfg.peak / mse_value);
}

double sam(const PatchRaster& pred, const PatchRaster& ref, const MetricsConfig& cfg) {
  check_shapes(pred, ref);
  if (pred.bands < 2) throw Error(ErrorCode::DimensionMismatch, "SAM needs at least two bands");
  return masked_sam(pred.values, ref.values, joint_valid_mask(pred, ref), cfg.sam_epsilon);
}

double ssim(const PatchRaster& pred, const PatchRaster& ref, const MetricsConfig& cfg) {
  check_shapes(pred, ref);
  cfg.validate();
  double total = 0.0;
  for (int b = 0; b < pred.bands; ++b) total += ssim_plane(pred.plane(b), ref.plane(b), cfg);
  return total / pred.bands;
}

MetricsRow evaluate_pair(std::string sample_id, const PatchRaster& pred, const PatchRaster& ref,
                         const MetricsConfig& cfg) {
  MetricsRow row;
  row.sample_id = std::move(sample_id);
  row.mse = mse(pred, ref);
  row.psnr_db = psnr(row.mse, cfg);
  row.ssim = ssim(pred, ref, cfg);
  row.sam_rad = sam(pred, ref, cfg);
  return row;
}

MetricsReport aggregate(std::vector<MetricsRow> rows, const MetricsConfig& cfg) {
  MetricsReport r;
  r.config = cfg;
  r.n = rows.size();
  if (!rows.empty()) {
    // Kahan sums in row order: reproducible regardless of how rows were computed
    const auto mean = [&](auto field) {
      double sum = 0.0, comp = 0.0;
      for (const auto& row : rows) {
        const double y = row.*field - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
      }
      return sum / double(rows.size());
    };
    r.mse = mean(&MetricsRow::mse);
    r.ssim = mean(&MetricsRow::ssim);
    r.sam_rad = mean(&MetricsRow::sam_rad);
    r.psnr_db = psnr(r.mse, cfg);
  }
  r.rows = std::move(rows);
  return r;
}

MetricsReport evaluate(const Manifest& manifest, const fs::path& prediction_dir, const fs::path& reference_store,
                       const MetricsConfig& cfg, unsigned jobs) {
  cfg.validate();
  const std::string& target = manifest.header.target_item;
  for (const auto& rec : manifest.records) {
    const auto id = rec.sample.id();
    if (!fs::exists(raster_path(prediction_dir, id))) throw Error(ErrorCode::MissingPrediction, id);
    const auto it = rec.sample.bindings.find(target);
    if (it == rec.sample.bindings.end() || !fs::exists(raster_path(reference_store, it->second.s2_patch_id)))
      throw Error(ErrorCode::MissingReference, id);
  }
  std::vector<MetricsRow> rows(manifest.records.size());
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    const Sample& s = manifest.records[i].sample;
    const auto id = s.id();
    const PatchRaster pred = load_raster(id, prediction_dir);
    const PatchRaster ref = load_raster(s.bindings.at(target).s2_patch_id, reference_store);
    rows[i] = evaluate_pair(id, pred, ref, cfg);
  });
  return aggregate(std::move(rows), cfg);
}

std::string report_csv(const MetricsReport& report) {
  std::string out = "sample_id,mse,psnr_db,ssim,sam_rad\n";
  for (const auto& r : report.rows)
    out += r.sample_id + "," + fmt_double(r.mse) + "," + fmt_double(r.psnr_db) + "," + fmt_double(r.ssim) + "," +
           fmt_double(r.sam_rad) + "\n";
  return out;
}

std::string report_json(const MetricsReport& report) {
  nlohmann::json j;
  j["n"] = report.n;
  j["mse"] = json_number(report.mse);
  j["psnr_db"] = json_number(report.psnr_db);
  j["ssim"] = json_number(report.ssim);
  j["sam_rad"] = json_number(report.sam_rad);
  const auto& c = report.config;
  j["config"] = {{"peak", c.peak},       {"ssim_window", c.ssim_window}, {"ssim_sigma", c.ssim_sigma},
                 {"ssim_k1", c.ssim_k1}, {"ssim_k2", c.ssim_k2},         {"sam_epsilon", c.sam_epsilon}};
  return j.dump(2) + "\n";
}

void write_report_csv(const fs::path& file, const MetricsReport& report) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  out << report_csv(report);
}

void write_report_json(const fs::path& file, const MetricsReport& report) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  out << report_json(report);
}

}  // namespace acqlayout
