#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "acqlayout/gapfill.hpp"
#include "acqlayout/ingest.hpp"
#include "acqlayout/layout.hpp"
#include "acqlayout/manifest.hpp"
#include "acqlayout/metrics.hpp"
#include "acqlayout/sampler.hpp"
#include "acqlayout/spatial_index.hpp"
#include "acqlayout/synthgen.hpp"
#include "oracles.hpp"

using namespace acqlayout;
namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kEpoch = 1'500'000'000;

std::vector<std::string> ids(const std::vector<IndexedPatch>& patches) {
  std::vector<std::string> out;
  for (const auto& p : patches) out.push_back(p.stat.patch_id);
  return out;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// (MSE, published PSNR in dB) at peak 10000
constexpr std::pair<double, double> kPsnrRows[] = {
    {324508, 24.888}, {277971, 25.560}, {261223, 25.830}, {234410, 26.300}, {324099, 24.893}, {260827, 25.836},
    {221909, 26.538}, {141283, 28.499}, {138212, 28.594}, {133061, 28.759}, {239238, 26.212}, {178284, 27.489},
    {157663, 28.023}, {79904, 30.974},  {63097, 32.000},  {61016, 32.146},  {52814, 32.772}};

Outcome ac1() {
  double worst = 0;
  for (const auto& [m, p] : kPsnrRows) worst = std::max(worst, std::abs(psnr(m) - p));
  return {worst <= 0.01, fmt("max |dPSNR| = %.5f dB over 17 rows", worst)};
}

Outcome ac2(const fs::path& dir) {
  SynthSpec spec;
  spec.n_tiles = 1;
  spec.grid_rows = 2;
  spec.grid_cols = 5;
  spec.end = spec.start + 19 * 5 * kDay;
  spec.trend = TrendModel::Linear;
  spec.patch_size = 32;
  spec.seed = 2;
  generate(spec, dir / "archive");
  const AcquisitionsLayout layout = parse_layout(
      "layout ac2 {\n"
      "  item t-1 { sar = none, clouds = 0, when = [-18d,-10d], role = input }\n"
      "  item t { sar = none, clouds = [0,100], when = reference, role = input }\n"
      "  item t+1 { sar = none, clouds = 0, when = [+10d,+18d], role = input }\n"
      "  item t' { sar = none, clouds = 0, when = [0d,0d] overlapping, role = target }\n"
      "}\n");
  const PatchIndex index = build_index(ingest_metadata(dir / "archive" / "metadata.csv"));
  const auto samples = resolve_samples(layout, index);
  if (samples.empty()) return {false, "no samples"};
  const Manifest manifest = make_manifest(make_manifest_header(layout, index, std::nullopt), samples, std::nullopt);
  run_backend(Backend::GapfillLinear, manifest, dir / "archive" / "rasters", dir / "pred");
  const MetricsReport r = evaluate(manifest, backend_output_dir(dir / "pred", Backend::GapfillLinear),
                                   dir / "archive" / "rasters");
  return {r.mse <= 1.0 && r.ssim >= 0.999, fmt("n=%.0f MSE=%.4f SSIM=%.6f", double(r.n), r.mse, r.ssim)};
}

Outcome ac3() {
  std::size_t checked = 0, mismatched = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto records = oracle::random_archive(seed + 1000, {.locations = 1 + int(seed % 20), .max_acquisitions = 50});
    const PatchIndex index = build_index(records);
    for (const auto& layout : builtin::all()) {
      ++checked;
      auto got = oracle::canonical_sorted(resolve_samples(layout, index));
      if (got != oracle::enumerate_samples(layout, records, 1.0)) ++mismatched;
    }
  }
  return {mismatched == 0, fmt("%.0f archive/layout pairs, %.0f mismatches", double(checked), double(mismatched))};
}

Outcome ac4() {
  const auto records = oracle::random_archive(77, {.locations = 450, .max_acquisitions = 50});
  const PatchIndex index = build_index(records);
  const auto locs = index.locations();
  SplitMix rng(99);
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const PatchKey& key = locs[rng.below(locs.size())];
    BoxQuery box;
    const double c0 = rng.uniform(), c1 = rng.uniform();
    box.cloud = {std::min(c0, c1), std::max(c0, c1)};
    const std::int64_t t0 = kEpoch + std::int64_t(rng.below(90)) * kDay;
    box.time = {double(t0), double(t0 + std::int64_t(rng.below(40)) * kDay)};
    box.sar_gap = {0, double(rng.below(10)) * kDay};
    box.valid = {rng.uniform() < 0.5 ? 1.0 : 0.0, 1.0};
    if (ids(index.box_query(key, box)) != oracle::box_scan(records, key, box)) ++bad;
    const std::int64_t t = kEpoch + std::int64_t(rng.below(100 * kDay));
    const auto got = index.nearest_sar(key, t);
    const auto want = oracle::nearest_sar_scan(records, key, t);
    if (got.has_value() != want.has_value() || (got && *got != *want)) ++bad;
  }
  return {bad == 0 && records.size() >= 10000,
          fmt("%.0f records, 2000 queries, %.0f mismatches", double(records.size()), double(bad))};
}

Outcome ac5() {
  std::vector<PatchKey> keys;
  for (int i = 0; i < 10000; ++i) keys.push_back({"T" + std::to_string(i / 100), std::uint32_t(i % 100), std::uint32_t(i / 37)});
  const SplitFractions f;
  double worst = 0;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto a = split_geographic(keys, f, seed), b = split_geographic(keys, f, seed);
    ok &= a == b && a.assignment.size() == keys.size();
    ok &= a.count(Split::Train) + a.count(Split::Val) + a.count(Split::Test) == keys.size();
    const double n = double(keys.size());
    worst = std::max({worst, std::abs(a.count(Split::Train) / n - f.train), std::abs(a.count(Split::Val) / n - f.val),
                      std::abs(a.count(Split::Test) / n - f.test)});
  }
  return {ok && worst <= 0.02, fmt("max share deviation %.4f over 20 seeds", worst)};
}

Outcome ac6() {
  SynthSpec spec;
  spec.n_tiles = 1;
  spec.end = spec.start + 180 * kDay;
  spec.write_rasters = false;
  const PatchIndex index = build_index(simulate(spec).records);
  const auto all = resolve_samples(builtin::msop(), index);
  std::map<PatchKey, std::size_t> per_all, per_cap;
  for (const auto& s : all) ++per_all[s.location];
  const auto capped = cap_per_location(all, 50, 4);
  std::set<std::string> ids;
  for (const auto& s : all) ids.insert(s.id());
  bool ok = true;
  std::size_t max_cap = 0, max_all = 0;
  for (const auto& s : capped) {
    ++per_cap[s.location];
    ok &= ids.count(s.id()) == 1;
  }
  for (const auto& [k, n] : per_all) {
    max_all = std::max(max_all, n);
    max_cap = std::max(max_cap, per_cap[k]);
    ok &= per_cap[k] == std::min<std::size_t>(n, 50);
  }
  ok &= capped == cap_per_location(all, 50, 4) && max_all > 50;
  return {ok, fmt("max per location: uncapped %.0f, capped %.0f", double(max_all), double(max_cap))};
}

Outcome ac7() {
  SplitMix rng(7);
  double worst_self = 0, worst_scale = 0, worst_sym = 0;
  for (int i = 0; i < 100; ++i) {
    const int n = 16 + int(rng.below(17));
    PatchRaster a("a", n, n, 4, DType::U16, 0), b("b", n, n, 4, DType::U16, 0);
    for (Eigen::Index p = 0; p < a.values.size(); ++p) {
      a.values(p) = 1 + double(rng.below(9999));
      b.values(p) = 1 + double(rng.below(9999));
    }
    worst_self = std::max({worst_self, mse(a, a), std::abs(ssim(a, a) - 1.0), sam(a, a)});
    PatchRaster scaled = a;
    scaled.dtype = DType::F32;
    scaled.values *= 2.5;
    worst_scale = std::max(worst_scale, std::abs(sam(scaled, b) - sam(a, b)));
    worst_sym = std::max(worst_sym, std::abs(ssim(a, b) - ssim(b, a)));
  }
  PatchRaster c100("x", 16, 16, 4, DType::U16, 0, 100), c200("y", 16, 16, 4, DType::U16, 0, 200);
  const double constant = ssim(c100, c200);
  const bool ok = worst_self == 0 && worst_scale <= 1e-9 && worst_sym <= 1e-12 && std::abs(constant - 1040000.0 / 1050000.0) <= 1e-6;
  return {ok, fmt("identity %.1e, SAM scale %.1e, SSIM symmetry %.1e", worst_self, worst_scale, worst_sym) +
                  fmt(", SSIM(100,200) = %.6f", constant)};
}

Outcome ac8(const fs::path& dir) {
  SynthSpec spec;
  spec.n_tiles = 1;
  spec.patch_size = 32;
  spec.sudden_change = true;
  spec.trend = TrendModel::SeasonalSine;
  spec.seed = 8;
  generate(spec, dir / "archive");
  const fs::path store = dir / "archive" / "rasters";
  const PatchIndex index = build_index(ingest_metadata(dir / "archive" / "metadata.csv"));
  const AcquisitionsLayout layout = builtin::msop_cld();
  const Manifest manifest =
      make_manifest(make_manifest_header(layout, index, std::nullopt), resolve_samples(layout, index), std::nullopt);
  if (manifest.records.empty()) return {false, "no samples"};

  // The oracle writes the clean scene at the target date.
  for (const auto& r : manifest.records) {
    const auto& target = r.sample.bindings.at(manifest.header.target_item);
    PatchRaster truth = clean_raster(spec, r.sample.location, target.s2_timestamp, r.sample.id());
    store_raster(truth, dir / "oracle");
  }
  BackendOptions opts;
  opts.external_predictions = dir / "oracle";
  run_backend(Backend::External, manifest, store, dir / "pred", opts);
  run_backend(Backend::GapfillLinear, manifest, store, dir / "pred");
  const MetricsReport o = evaluate(manifest, backend_output_dir(dir / "pred", Backend::External), store);
  const MetricsReport g = evaluate(manifest, backend_output_dir(dir / "pred", Backend::GapfillLinear), store);
  const bool ok = o.mse < g.mse && o.psnr_db > g.psnr_db && o.ssim > g.ssim && o.sam_rad < g.sam_rad;
  return {ok, fmt("oracle MSE %.1f SSIM %.4f SAM %.4f", o.mse, o.ssim, o.sam_rad) +
                  fmt(" vs gapfill MSE %.1f SSIM %.4f SAM %.4f", g.mse, g.ssim, g.sam_rad)};
}

int run(const std::string& cli, const std::string& args) {
  const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome ac9(const std::string& cli, const fs::path& dir) {
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  const auto pipeline = [&](const fs::path& out) {
    int rc = run(cli, "synth --out " + q(out / "a") + " --seed 11 --tiles 1 --patch-size 32 --days 90");
    rc |= run(cli, "split --metadata " + q(out / "a" / "metadata.csv") + " --seed 5 --out " + q(out / "s"));
    rc |= run(cli, "query --metadata " + q(out / "a" / "metadata.csv") + " --layout msop_cld --split train" +
                       " --split-file " + q(out / "s" / "split.csv") + " --cap 3 --seed 5 --out " + q(out / "q"));
    rc |= run(cli, "gapfill --manifest " + q(out / "q" / "manifest.jsonl") + " --rasters " + q(out / "a" / "rasters") +
                       " --out " + q(out / "p") + " --jobs 3");
    rc |= run(cli, "evaluate --manifest " + q(out / "q" / "manifest.jsonl") + " --predictions " +
                       q(out / "p" / "gapfill_linear") + " --rasters " + q(out / "a" / "rasters") + " --out " +
                       q(out / "e"));
    return rc;
  };
  if (pipeline(dir / "r1") != 0 || pipeline(dir / "r2") != 0) return {false, "pipeline exited non-zero"};
  std::size_t files = 0, differ = 0;
  for (const char* sub : {"q", "p", "e"}) {
    for (const auto& e : fs::recursive_directory_iterator(dir / "r1" / sub)) {
      if (!e.is_regular_file() || e.path().filename() == "run.json") continue;
      ++files;
      const fs::path other = dir / "r2" / fs::relative(e.path(), dir / "r1");
      if (slurp(e.path()) != slurp(other)) ++differ;
    }
  }
  return {files > 3 && differ == 0, fmt("%.0f output files compared, %.0f differ", double(files), double(differ))};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path to acqlayout cli>\n");
    return 2;
  }
  const std::string cli = argv[1];
  oracle::TempDir dir("acceptance");

  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const Criterion criteria[] = {
      {"AC1 PSNR table", 1, ac1},
      {"AC2 linear trend gap-fill", 10, [&] { return ac2(dir / "ac2"); }},
      {"AC3 layout enumeration", 60, ac3},
      {"AC4 index vs linear scan", 30, ac4},
      {"AC5 geographic split", 60, ac5},
      {"AC6 per-location cap", 60, ac6},
      {"AC7 metric invariants", 60, ac7},
      {"AC8 oracle beats gap-fill", 120, [&] { return ac8(dir / "ac8"); }},
      {"AC9 end-to-end determinism", 300, [&] { return ac9(cli, dir / "ac9"); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = out.pass && secs <= c.budget_s;
    failures += !pass;
    std::printf("%s %s: %s (%.2f s, budget %.0f s)\n", pass ? "PASS" : "FAIL", c.name, out.detail.c_str(), secs,
                c.budget_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
