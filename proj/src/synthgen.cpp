#include "acqlayout/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "acqlayout/fingerprint.hpp"
#include "acqlayout/layout.hpp"
#include "acqlayout/parallel.hpp"

namespace acqlayout {

namespace fs = std::filesystem;

namespace {

constexpr int kS2Bands = 4;  // B2, B3, B4, B8
constexpr int kS1Bands = 2;  // VV, VH
constexpr double kS2NoData = 0.0;
constexpr double kS1NoData = -9999.0;

constexpr std::array<double, kS2Bands> kBandMean{700.0, 1000.0, 1100.0, 3000.0};
constexpr std::array<double, kS2Bands> kBandSpread{300.0, 400.0, 500.0, 800.0};
constexpr std::array<double, kS2Bands> kSeasonAmplitude{150.0, 200.0, 300.0, 600.0};
constexpr std::array<double, kS2Bands> kChangeStep{500.0, 600.0, 900.0, -1400.0};
constexpr double kMaxLinearDrift = 300.0;  // over the whole spec duration
constexpr double kYear = 365.25 * 86400.0;

std::uint64_t derive_seed(const SynthSpec& spec, const PatchKey& key, std::string_view purpose, std::int64_t index = 0) {
  return Fingerprint()
      .text("synthgen")
      .value(spec.seed)
      .text(key.tile_id)
      .value(key.row)
      .value(key.col)
      .text(purpose)
      .value(index)
      .digest();
}

// Value noise: uniform lattice values, bilinearly interpolated. Range [0, 1).
Eigen::ArrayXXd smooth_field(SplitMix& rng, int size, int cells) {
  Eigen::ArrayXXd lattice(cells + 1, cells + 1);
  for (Eigen::Index i = 0; i < lattice.size(); ++i) lattice.data()[i] = rng.uniform();
  Eigen::ArrayXXd out(size, size);
  for (int y = 0; y < size; ++y) {
    const double fy = (y + 0.5) / size * cells;
    const int y0 = std::min(int(fy), cells - 1);
    const double ty = fy - y0;
    for (int x = 0; x < size; ++x) {
      const double fx = (x + 0.5) / size * cells;
      const int x0 = std::min(int(fx), cells - 1);
      const double tx = fx - x0;
      out(y, x) = (1 - ty) * ((1 - tx) * lattice(y0, x0) + tx * lattice(y0, x0 + 1)) +
                  ty * ((1 - tx) * lattice(y0 + 1, x0) + tx * lattice(y0 + 1, x0 + 1));
    }
  }
  return out;
}

struct Planting {
  std::size_t reference = 0;
  std::size_t before = 0;
  std::size_t near = 0;
  std::size_t after = 0;
};

// Location-wide radiometric model.
struct LocationModel {
  PatchKey key;
  std::array<Eigen::ArrayXXd, kS2Bands> base, slope, amplitude, phase;
  Eigen::ArrayXXd sar_base;
  std::optional<Planting> planting;
  std::optional<std::int64_t> change_time;
};

std::int64_t planting_stride(const SynthSpec& spec) {
  return std::max<std::int64_t>(1, std::llround(14.0 * 86400.0 / double(spec.s2_revisit)));
}

std::optional<Planting> choose_planting(const SynthSpec& spec, const PatchKey& key, std::size_t n_dates) {
  if (!spec.plant_layouts) return std::nullopt;
  const auto m = static_cast<std::size_t>(planting_stride(spec));
  SplitMix rng(derive_seed(spec, key, "plant"));
  Planting p;
  p.reference = m + static_cast<std::size_t>(rng.below(n_dates - 2 * m));
  p.before = p.reference - m;
  p.near = p.reference + 1;
  p.after = p.reference + m;
  return p;
}

LocationModel make_model(const SynthSpec& spec, const PatchKey& key, std::size_t n_s2_dates) {
  LocationModel model;
  model.key = key;
  SplitMix rng(derive_seed(spec, key, "radiometry"));
  const int size = spec.patch_size;
  const int cells = std::max(2, size / 16);
  const double duration_days = std::max(1.0, double(spec.end - spec.start) / 86400.0);
  for (int b = 0; b < kS2Bands; ++b) {
    model.base[b] = kBandMean[b] + kBandSpread[b] * (2.0 * smooth_field(rng, size, cells) - 1.0);
    model.slope[b] = (kMaxLinearDrift / duration_days) * (2.0 * smooth_field(rng, size, cells) - 1.0);
    model.amplitude[b] = kSeasonAmplitude[b] * (0.5 + 0.5 * smooth_field(rng, size, cells));
    model.phase[b] = 2.0 * std::numbers::pi * smooth_field(rng, size, cells);
  }
  model.sar_base = 0.05 + 0.1 * smooth_field(rng, size, cells);
  model.planting = choose_planting(spec, key, n_s2_dates);
  if (model.planting && spec.sudden_change) {
    const auto ref_time = spec.start + std::int64_t(model.planting->reference) * spec.s2_revisit;
    model.change_time = ref_time - spec.s2_revisit / 2;
  }
  return model;
}

double clean_value(const SynthSpec& spec, const LocationModel& m, int x, int y, int band, std::int64_t t) {
  double v = m.base[band](y, x);
  switch (spec.trend) {
    case TrendModel::Constant:
      break;
    case TrendModel::Linear:
      v += m.slope[band](y, x) * (double(t - spec.start) / 86400.0);
      break;
    case TrendModel::SeasonalSine:
      v += m.amplitude[band](y, x) * std::sin(2.0 * std::numbers::pi * double(t - spec.start) / kYear + m.phase[band](y, x));
      break;
  }
  if (m.change_time && t >= *m.change_time && x < spec.patch_size / 2) v += kChangeStep[band];
  return std::clamp(v, 1.0, 10000.0);
}

PatchRaster clean_from_model(const SynthSpec& spec, const LocationModel& m, std::int64_t t, std::string id) {
  PatchRaster r(std::move(id), spec.patch_size, spec.patch_size, kS2Bands, DType::U16, kS2NoData);
  for (int y = 0; y < spec.patch_size; ++y)
    for (int x = 0; x < spec.patch_size; ++x)
      for (int b = 0; b < kS2Bands; ++b) r.at(x, y, b) = quantize(clean_value(spec, m, x, y, b, t), DType::U16);
  return r;
}

// Draws a patch cloud cover with mean p: half the mass on {0, 1} in
// proportion (1-p):p, half on U^k with E[U^k] = p.
double draw_cloud_cover(SplitMix& rng, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double u = rng.uniform();
  if (u < (1.0 - p) / 2.0) return 0.0;
  if (u < 0.5) return 1.0;
  return std::pow(rng.uniform(), (1.0 - p) / p);
}

struct Acquisition {
  std::int64_t time = 0;
  int nodata_columns = 0;
  double cover = 0.0;  // target cloud cover (S2)
};

struct LocationResult {
  std::vector<PatchStat> records;
  std::vector<std::pair<std::string, std::string>> checksums;
  LocationTruth truth;
  double cloud_sum = 0.0;
};

std::string patch_id_for(Sensor s, const PatchKey& key, std::int64_t t) {
  return std::string(to_string(s)) + "_" + key.tile_id + "_" + std::to_string(key.row) + "_" +
         std::to_string(key.col) + "_" + std::to_string(t);
}

LocationResult generate_location(const SynthSpec& spec, const PatchKey& key, const fs::path* out_dir) {
  const auto s2_times = s2_schedule(spec);
  const auto s1_times = s1_schedule(spec);
  const LocationModel model = make_model(spec, key, s2_times.size());
  const int P = spec.patch_size;

  std::vector<Acquisition> s2(s2_times.size());
  std::vector<Acquisition> s1(s1_times.size());
  for (std::size_t i = 0; i < s2.size(); ++i) {
    SplitMix rng(derive_seed(spec, key, "s2-acq", std::int64_t(i)));
    s2[i].time = s2_times[i];
    s2[i].cover = draw_cloud_cover(rng, spec.cloud_probability);
    if (rng.uniform() < spec.partial_valid_probability) s2[i].nodata_columns = 1 + int(rng.below(std::uint64_t(P / 4)));
  }
  for (std::size_t j = 0; j < s1.size(); ++j) {
    SplitMix rng(derive_seed(spec, key, "s1-acq", std::int64_t(j)));
    s1[j].time = s1_times[j];
    if (rng.uniform() < spec.partial_valid_probability) s1[j].nodata_columns = 1 + int(rng.below(std::uint64_t(P / 4)));
  }

  const auto nearest_s1 = [&](std::int64_t t) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < s1.size(); ++j)
      if (std::abs(s1[j].time - t) < std::abs(s1[best].time - t)) best = j;
    return best;
  };

  LocationTruth truth;
  truth.key = key;
  truth.change_time = model.change_time;
  if (model.planting) {
    const Planting& p = *model.planting;
    truth.planted_reference = s2[p.reference].time;
    for (std::size_t i : {p.before, p.near, p.after}) s2[i] = {s2[i].time, 0, 0.0};
    s2[p.reference] = {s2[p.reference].time, 0, 1.0};
    for (std::size_t i : {p.before, p.reference, p.after}) s1[nearest_s1(s2[i].time)].nodata_columns = 0;
  }

  LocationResult result;
  const fs::path raster_dir = out_dir ? *out_dir / "rasters" : fs::path{};
  const fs::path mask_dir = out_dir ? *out_dir / "masks" : fs::path{};

  // S1 first so S2 bookkeeping can see which SAR acquisitions are valid
  std::vector<PatchStat> s1_records;
  for (std::size_t j = 0; j < s1.size(); ++j) {
    const auto& a = s1[j];
    SplitMix rng(derive_seed(spec, key, "s1-pixels", std::int64_t(j)));
    PatchRaster r(patch_id_for(Sensor::S1, key, a.time), P, P, kS1Bands, DType::F32, kS1NoData);
    const double speckle = 0.9 + 0.2 * rng.uniform();
    for (int y = 0; y < P; ++y)
      for (int x = 0; x < P; ++x) {
        const bool nodata = x >= P - a.nodata_columns;
        const double vv = model.sar_base(y, x) * speckle;
        r.at(x, y, 0) = nodata ? kS1NoData : quantize(vv, DType::F32);
        r.at(x, y, 1) = nodata ? kS1NoData : quantize(0.2 * vv, DType::F32);
      }
    PatchStat stat{key, Sensor::S1, a.time, std::nullopt, valid_fraction_from_raster(r), r.patch_id};
    if (out_dir) {
      store_raster(r, raster_dir);
      result.checksums.emplace_back(r.patch_id, raster_checksum(r));
    }
    s1_records.push_back(std::move(stat));
  }

  double clear_sum = 0.0;
  for (std::size_t i = 0; i < s2.size(); ++i) {
    const auto& a = s2[i];
    SplitMix rng(derive_seed(spec, key, "s2-pixels", std::int64_t(i)));
    const std::int64_t n_valid = std::int64_t(P - a.nodata_columns) * P;
    const auto n_cloud = std::min<std::int64_t>(n_valid, std::llround(a.cover * double(n_valid)));

    // cloud blobs: the n_cloud valid pixels with the highest smooth-noise value
    const Eigen::ArrayXXd field = smooth_field(rng, P, std::max(2, P / 16));
    std::vector<std::int64_t> order;
    order.reserve(std::size_t(n_valid));
    for (int y = 0; y < P; ++y)
      for (int x = 0; x < P - a.nodata_columns; ++x) order.push_back(std::int64_t(y) * P + x);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t l, std::int64_t r) {
      return field(l / P, l % P) > field(r / P, r % P);
    });

    CloudMask mask = CloudMask::Constant(P, P, std::uint8_t(CloudLabel::Clear));
    for (int y = 0; y < P; ++y)
      for (int x = P - a.nodata_columns; x < P; ++x) mask(y, x) = std::uint8_t(CloudLabel::NoData);
    const auto n_shadow = n_cloud / 5;
    for (std::int64_t k = 0; k < n_cloud; ++k) {
      const auto idx = order[std::size_t(k)];
      mask(idx / P, idx % P) = std::uint8_t(k >= n_cloud - n_shadow ? CloudLabel::CloudShadow : CloudLabel::Cloud);
    }

    const std::string id = patch_id_for(Sensor::S2, key, a.time);
    PatchRaster r = clean_from_model(spec, model, a.time, id);
    for (int y = 0; y < P; ++y)
      for (int x = 0; x < P; ++x) {
        const auto label = CloudLabel(mask(y, x));
        for (int b = 0; b < kS2Bands; ++b) {
          double& v = r.at(x, y, b);
          if (label == CloudLabel::NoData) {
            v = kS2NoData;
          } else if (label == CloudLabel::Cloud) {
            v = 6000.0 + double(rng.below(3000));
          } else if (label == CloudLabel::CloudShadow) {
            v = std::max(1.0, quantize(0.35 * v, DType::U16));
          }
        }
      }

    PatchStat stat{key, Sensor::S2, a.time, cloud_fraction_from_mask(mask, P), valid_fraction_from_raster(r), id};
    if (out_dir) {
      store_raster(r, raster_dir);
      store_raster(mask_to_raster(mask, id), mask_dir);
      result.checksums.emplace_back(id, raster_checksum(r));
    }

    // bookkeeping straight from the generator's own counts
    const double cover = double(n_cloud) / double(n_valid);
    const bool valid = a.nodata_columns == 0;
    clear_sum += 1.0 - cover;
    result.cloud_sum += cover;
    SynthCounts& c = truth.counts;
    ++c.s2_total;
    if (valid) {
      ++c.s2_valid;
      std::int64_t best_gap = -1;
      for (const auto& s : s1)
        if (s.nodata_columns == 0) {
          const auto g = std::abs(s.time - a.time);
          if (best_gap < 0 || g < best_gap) best_gap = g;
        }
      const bool sar72 = best_gap >= 0 && best_gap <= kDefaultMaxSarGap;
      const bool clear = n_cloud == 0;
      const bool overcast = n_cloud == n_valid;
      c.s2_clear += clear;
      c.s2_overcast += overcast;
      c.s2_sar72 += sar72;
      c.s2_clear_sar72 += clear && sar72;
      c.s2_overcast_sar72 += overcast && sar72;
    }
    result.records.push_back(std::move(stat));
  }
  truth.counts.s1_total = s1_records.size();
  truth.clear_fraction = s2.empty() ? 0.0 : clear_sum / double(s2.size());
  std::move(s1_records.begin(), s1_records.end(), std::back_inserter(result.records));
  result.truth = std::move(truth);
  return result;
}

SynthTruth run(const SynthSpec& spec, const fs::path* out_dir) {
  spec.validate();
  std::vector<PatchKey> keys;
  for (int t = 0; t < spec.n_tiles; ++t)
    for (int r = 0; r < spec.grid_rows; ++r)
      for (int c = 0; c < spec.grid_cols; ++c) keys.push_back({synth_tile_id(t), std::uint32_t(r), std::uint32_t(c)});

  if (out_dir) {
    fs::create_directories(*out_dir / "rasters");
    fs::create_directories(*out_dir / "masks");
  }
  std::vector<LocationResult> results(keys.size());
  parallel_for(keys.size(), spec.jobs, [&](std::size_t i) { results[i] = generate_location(spec, keys[i], out_dir); });

  SynthTruth truth;
  truth.spec = spec;
  double cloud_sum = 0.0;
  for (auto& r : results) {
    std::move(r.records.begin(), r.records.end(), std::back_inserter(truth.records));
    for (auto& [id, sum] : r.checksums) truth.raster_checksums.emplace(id, std::move(sum));
    truth.totals += r.truth.counts;
    cloud_sum += r.cloud_sum;
    truth.locations.push_back(std::move(r.truth));
  }
  truth.mean_cloud_fraction = truth.totals.s2_total ? cloud_sum / double(truth.totals.s2_total) : 0.0;
  return truth;
}

}  // namespace

std::string_view to_string(TrendModel m) {
  switch (m) {
    case TrendModel::Constant: return "constant";
    case TrendModel::Linear: return "linear";
    case TrendModel::SeasonalSine: return "seasonal-sine";
  }
  return "constant";
}

std::optional<TrendModel> parse_trend_model(std::string_view s) {
  if (s == "constant") return TrendModel::Constant;
  if (s == "linear") return TrendModel::Linear;
  if (s == "seasonal-sine" || s == "seasonal") return TrendModel::SeasonalSine;
  return std::nullopt;
}

SynthCounts& SynthCounts::operator+=(const SynthCounts& o) {
  s1_total += o.s1_total;
  s2_total += o.s2_total;
  s2_valid += o.s2_valid;
  s2_clear += o.s2_clear;
  s2_overcast += o.s2_overcast;
  s2_sar72 += o.s2_sar72;
  s2_clear_sar72 += o.s2_clear_sar72;
  s2_overcast_sar72 += o.s2_overcast_sar72;
  return *this;
}

void SynthSpec::validate() const {
  const auto bad = [](const std::string& why) { throw Error(ErrorCode::BadSpec, why); };
  if (n_tiles < 1 || grid_rows < 1 || grid_cols < 1) bad("tile and grid counts must be positive");
  if (n_tiles > 100) bad("at most 100 tiles");
  if (end < start) bad("end before start");
  if (s2_revisit <= 0 || s1_revisit <= 0) bad("revisit periods must be positive");
  if (!(cloud_probability >= 0.0 && cloud_probability <= 1.0)) bad("cloud probability outside [0,1]");
  if (!(partial_valid_probability >= 0.0 && partial_valid_probability <= 1.0)) bad("partial-valid probability outside [0,1]");
  if (patch_size < 4 || patch_size > 4096) bad("patch size outside [4, 4096]");
  if (sudden_change && !plant_layouts) bad("sudden change needs a planted reference date");
  if (plant_layouts) {
    const auto m = planting_stride(*this);
    const auto n = s2_schedule(*this).size();
    const auto offset = m * s2_revisit;
    if (offset < 10 * kSecondsPerDay || offset > 18 * kSecondsPerDay || s2_revisit > 5 * kSecondsPerDay)
      bad("S2 revisit cannot realize the planted acquisition pattern");
    if (n < std::size_t(2 * m + 1)) bad("date range too short for the planted acquisition pattern");
    if (s1_revisit > 2 * kDefaultMaxSarGap) bad("S1 revisit too long to pair planted acquisitions within 72 h");
  }
}

std::vector<std::int64_t> s2_schedule(const SynthSpec& spec) {
  std::vector<std::int64_t> out;
  for (std::int64_t t = spec.start; t <= spec.end; t += spec.s2_revisit) out.push_back(t);
  return out;
}

std::vector<std::int64_t> s1_schedule(const SynthSpec& spec) {
  // one revisit of margin on both ends so every S2 date has SAR on either side
  const std::int64_t lo = spec.start - spec.s1_revisit;
  const std::int64_t hi = spec.end + spec.s1_revisit;
  const std::int64_t anchor = spec.start + spec.s1_phase;
  std::int64_t k = (lo - anchor) / spec.s1_revisit;
  while (anchor + k * spec.s1_revisit < lo) ++k;
  while (anchor + (k - 1) * spec.s1_revisit >= lo) --k;
  std::vector<std::int64_t> out;
  for (std::int64_t t = anchor + k * spec.s1_revisit; t <= hi; t += spec.s1_revisit) out.push_back(t);
  return out;
}

std::string synth_tile_id(int tile) {
  std::string id = std::to_string(tile);
  if (id.size() < 2) id.insert(0, 2 - id.size(), '0');
  return "SYN" + id;
}

SynthTruth simulate(const SynthSpec& spec) { return run(spec, nullptr); }

SynthTruth generate(const SynthSpec& spec, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  SynthTruth truth = run(spec, spec.write_rasters ? &out_dir : nullptr);
  write_metadata(out_dir / "metadata.csv", truth.records);
  write_truth_json(out_dir / "truth.json", truth);
  return truth;
}

PatchRaster clean_raster(const SynthSpec& spec, const PatchKey& key, std::int64_t t, std::string patch_id) {
  const LocationModel model = make_model(spec, key, s2_schedule(spec).size());
  return clean_from_model(spec, model, t, std::move(patch_id));
}

namespace {
nlohmann::json counts_json(const SynthCounts& c) {
  return {{"s1_total", c.s1_total},         {"s2_total", c.s2_total},
          {"s2_valid", c.s2_valid},         {"s2_clear", c.s2_clear},
          {"s2_overcast", c.s2_overcast},   {"s2_sar72", c.s2_sar72},
          {"s2_clear_sar72", c.s2_clear_sar72}, {"s2_overcast_sar72", c.s2_overcast_sar72}};
}
}  // namespace

void write_truth_json(const fs::path& file, const SynthTruth& truth) {
  using nlohmann::json;
  const SynthSpec& s = truth.spec;
  json j;
  j["spec"] = {{"n_tiles", s.n_tiles},
               {"grid_rows", s.grid_rows},
               {"grid_cols", s.grid_cols},
               {"start", s.start},
               {"end", s.end},
               {"s2_revisit_s", s.s2_revisit},
               {"s1_revisit_s", s.s1_revisit},
               {"s1_phase_s", s.s1_phase},
               {"cloud_probability", s.cloud_probability},
               {"trend_model", std::string(to_string(s.trend))},
               {"patch_size", s.patch_size},
               {"seed", s.seed},
               {"plant_layouts", s.plant_layouts},
               {"sudden_change", s.sudden_change},
               {"partial_valid_probability", s.partial_valid_probability}};
  j["totals"] = counts_json(truth.totals);
  j["mean_cloud_fraction"] = truth.mean_cloud_fraction;
  json locs = json::array();
  for (const auto& l : truth.locations) {
    json e = {{"tile", l.key.tile_id}, {"row", l.key.row}, {"col", l.key.col},
              {"clear_fraction", l.clear_fraction}, {"counts", counts_json(l.counts)}};
    e["planted_reference"] = l.planted_reference ? json(*l.planted_reference) : json(nullptr);
    e["change_time"] = l.change_time ? json(*l.change_time) : json(nullptr);
    locs.push_back(std::move(e));
  }
  j["locations"] = std::move(locs);
  json recs = json::array();
  for (const auto& r : truth.records) {
    json e = {{"patch_id", r.patch_id}, {"tile", r.key.tile_id}, {"row", r.key.row},      {"col", r.key.col},
              {"sensor", std::string(to_string(r.sensor))},    {"timestamp", r.timestamp}, {"valid_fraction", r.valid_fraction}};
    e["cloud_fraction"] = r.cloud_fraction ? json(*r.cloud_fraction) : json(nullptr);
    const auto it = truth.raster_checksums.find(r.patch_id);
    if (it != truth.raster_checksums.end()) e["checksum"] = it->second;
    recs.push_back(std::move(e));
  }
  j["records"] = std::move(recs);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  out << j.dump(1) << '\n';
}

}  // namespace acqlayout
