#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "acqlayout/error.hpp"
#include "acqlayout/gapfill.hpp"
#include "acqlayout/ingest.hpp"
#include "acqlayout/layout.hpp"
#include "acqlayout/manifest.hpp"
#include "acqlayout/metrics.hpp"
#include "acqlayout/sampler.hpp"
#include "acqlayout/spatial_index.hpp"
#include "acqlayout/stats.hpp"
#include "acqlayout/synthgen.hpp"
#include "acqlayout/validate.hpp"

#ifndef ACQLAYOUT_VERSION
#define ACQLAYOUT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace acqlayout;

namespace {

struct Options {
  fs::path metadata;
  fs::path rasters;
  fs::path layout;
  fs::path out;
  fs::path index;
  fs::path manifest;
  fs::path predictions;
  fs::path split_file;
  std::optional<std::uint64_t> seed;
  std::string fractions = "0.8,0.05,0.15";
  std::optional<std::size_t> cap;
  std::optional<std::string> split;
  double peak = 10000.0;
  unsigned jobs = 0;
  double sar_threshold = 1.0;
  double bin_hours = 12.0;
  std::string backend = "gapfill_linear";
  std::string before_item = "t-1";
  std::string after_item = "t+1";

  // synth
  SynthSpec synth;
  double synth_days = 120.0;
  double s2_revisit_days = 5.0;
  double s1_revisit_days = 6.0;
  double s1_phase_hours = 0.0;
  std::string trend = "seasonal-sine";
  bool no_plant = false;
  bool no_rasters = false;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto days = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{now - days};
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()), int(hms.hours().count()), int(hms.minutes().count()),
                int(hms.seconds().count()));
  return buf;
}

/// Sidecar describing one invocation. The only file that carries a clock time.
class RunRecord {
 public:
  explicit RunRecord(std::string subcommand) {
    j_["subcommand"] = std::move(subcommand);
    j_["version"] = ACQLAYOUT_VERSION;
    j_["inputs"] = json::object();
    j_["outputs"] = json::array();
    j_["fingerprints"] = json::object();
  }
  void input(const std::string& key, const fs::path& p) { j_["inputs"][key] = p.string(); }
  void output(const fs::path& p) { j_["outputs"].push_back(p.filename().string()); }
  void fingerprint(const std::string& key, const std::string& v) { j_["fingerprints"][key] = v; }
  void seed(std::optional<std::uint64_t> s) { j_["seed"] = s ? json(*s) : json(nullptr); }
  json& extra() { return j_; }

  void write(const fs::path& dir) {
    j_["timestamp"] = utc_now();
    std::ofstream out(dir / "run.json", std::ios::trunc);
    out << j_.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "run.json").string());
  }

 private:
  json j_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

fs::path prepare_out(const Options& o) {
  require(!o.out.empty(), "--out is required");
  fs::create_directories(o.out);
  return o.out;
}

AcquisitionsLayout resolve_layout(const fs::path& arg) {
  const std::string s = arg.string();
  if (!fs::exists(arg)) {
    if (s == "ssop") return builtin::ssop();
    if (s == "msop") return builtin::msop();
    if (s == "msop_cld") return builtin::msop_cld();
  }
  return load_layout(arg);
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
}

PatchIndex open_index(const Options& o, RunRecord& run) {
  require(!o.metadata.empty(), "--metadata is required");
  run.input("metadata", o.metadata);
  auto records = ingest_metadata(o.metadata);
  if (o.index.empty()) return PatchIndex::build(std::move(records), o.sar_threshold);
  run.input("index", o.index);
  PatchIndex index = PatchIndex::load(o.index);
  if (index.fingerprint() != records_fingerprint(records, index.sar_validity_threshold()))
    throw Error(ErrorCode::FingerprintMismatch, o.index.string() + " was not built from " + o.metadata.string());
  return index;
}

int cmd_synth(const Options& o) {
  require(o.seed.has_value(), "--seed is required");
  SynthSpec spec = o.synth;
  spec.seed = *o.seed;
  spec.end = spec.start + std::llround(o.synth_days * 86400.0);
  spec.s2_revisit = std::llround(o.s2_revisit_days * 86400.0);
  spec.s1_revisit = std::llround(o.s1_revisit_days * 86400.0);
  spec.s1_phase = std::llround(o.s1_phase_hours * 3600.0);
  const auto trend = parse_trend_model(o.trend);
  require(trend.has_value(), "--trend must be constant, linear or seasonal-sine");
  spec.trend = *trend;
  spec.plant_layouts = !o.no_plant;
  spec.write_rasters = !o.no_rasters;
  spec.jobs = o.jobs;
  const fs::path out = prepare_out(o);
  RunRecord run("synth");
  run.seed(spec.seed);
  const SynthTruth truth = generate(spec, out);
  run.output(out / "metadata.csv");
  run.output(out / "truth.json");
  run.fingerprint("records", records_fingerprint(truth.records, 1.0));
  run.write(out);
  spdlog::info("synth: {} S2 and {} S1 acquisitions over {} locations", truth.totals.s2_total, truth.totals.s1_total,
               truth.locations.size());
  return 0;
}

int cmd_ingest(const Options& o) {
  require(!o.metadata.empty(), "--metadata is required");
  const fs::path out = prepare_out(o);
  RunRecord run("ingest");
  run.input("metadata", o.metadata);
  const auto records = ingest_metadata(o.metadata);
  write_metadata(out / "metadata.csv", records);
  run.output(out / "metadata.csv");
  run.fingerprint("records", records_fingerprint(records, o.sar_threshold));
  run.write(out);
  std::size_t s2 = 0;
  for (const auto& r : records) s2 += r.sensor == Sensor::S2;
  std::cout << "records " << records.size() << " (S2 " << s2 << ", S1 " << records.size() - s2 << ")\n";
  return 0;
}

int cmd_stats(const Options& o) {
  require(!o.metadata.empty(), "--metadata is required");
  const auto records = ingest_metadata(o.metadata);
  const GapHistogram hist = gap_histogram(records, o.bin_hours, o.sar_threshold);
  const CoverageMap cov = coverage_map(records);

  json j;
  j["gap_histogram"] = {{"bin_hours", o.bin_hours},
                        {"counts", hist.counts},
                        {"with_sar", hist.finite},
                        {"without_sar", hist.without_sar},
                        {"fraction_within_72h", hist.fraction_within(72 * 3600.0)}};
  j["coverage"] = {{"locations", cov.clear_fraction.size()},
                   {"mean_clear_fraction", cov.mean},
                   {"stddev_clear_fraction", cov.stddev},
                   {"histogram", cov.histogram}};

  std::cout << "nearest-SAR gap histogram (" << o.bin_hours << " h bins)\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    std::cout << "  [" << double(i) * o.bin_hours << ", " << double(i + 1) * o.bin_hours << ") h  " << hist.counts[i]
              << '\n';
  std::cout << "  S2 without valid SAR: " << hist.without_sar << '\n';
  std::cout << "  within 72 h: " << hist.fraction_within(72 * 3600.0) << '\n';
  std::cout << "clear-sky coverage over " << cov.clear_fraction.size() << " locations: mean " << cov.mean
            << ", stddev " << cov.stddev << '\n';

  if (!o.out.empty()) {
    const fs::path out = prepare_out(o);
    RunRecord run("stats");
    run.input("metadata", o.metadata);
    write_text(out / "stats.json", j.dump(2) + "\n");
    run.output(out / "stats.json");
    run.write(out);
  }
  return 0;
}

int cmd_index(const Options& o) {
  const fs::path out = prepare_out(o);
  RunRecord run("index");
  Options no_index = o;
  no_index.index.clear();
  const PatchIndex index = open_index(no_index, run);
  index.save(out / "index.bin");
  run.output(out / "index.bin");
  run.fingerprint("index", index.fingerprint());
  run.write(out);
  std::cout << "indexed " << index.records().size() << " records at " << index.locations().size()
            << " locations (fingerprint " << index.fingerprint() << ")\n";
  return 0;
}

int cmd_split(const Options& o) {
  require(o.seed.has_value(), "--seed is required");
  require(!o.metadata.empty(), "--metadata is required");
  const fs::path out = prepare_out(o);
  RunRecord run("split");
  run.input("metadata", o.metadata);
  run.seed(o.seed);
  const auto records = ingest_metadata(o.metadata);
  std::set<PatchKey> keys;
  for (const auto& r : records) keys.insert(r.key);
  const std::vector<PatchKey> locations(keys.begin(), keys.end());
  const SplitAssignment split = split_geographic(locations, parse_fractions(o.fractions), *o.seed);
  write_split(out / "split.csv", split);
  run.output(out / "split.csv");
  run.write(out);
  std::cout << "train " << split.count(Split::Train) << ", val " << split.count(Split::Val) << ", test "
            << split.count(Split::Test) << '\n';
  return 0;
}

int cmd_query(const Options& o) {
  require(!o.layout.empty(), "--layout is required");
  require(!o.cap || o.seed, "--cap needs --seed");
  require(!o.split || !o.split_file.empty(), "--split needs --split-file");
  std::optional<Split> split;
  if (o.split) {
    split = parse_split(*o.split);
    require(split.has_value(), "--split must be train, val or test");
  }
  const fs::path out = prepare_out(o);
  RunRecord run("query");
  run.seed(o.seed);
  const AcquisitionsLayout layout = resolve_layout(o.layout);
  run.input("layout", o.layout);
  const PatchIndex index = open_index(o, run);

  std::optional<Region> region;
  if (split) {
    run.input("split", o.split_file);
    region = read_split(o.split_file).region(*split);
  }
  const FeasibilityReport feasibility = validate_layout_against_archive(layout, index);
  for (const auto& item : feasibility.items)
    spdlog::info("item {}: {} candidate S2 patches", item.item, item.candidates);
  for (const auto& [a, b] : feasibility.window_overlaps) spdlog::info("windows of {} and {} overlap", a, b);

  auto samples = resolve_samples(layout, index, region, o.jobs);
  const std::size_t uncapped = samples.size();
  if (o.cap) samples = cap_per_location(std::move(samples), *o.cap, *o.seed);

  const Manifest manifest =
      emit_manifest(samples, split, out / "manifest.jsonl", make_manifest_header(layout, index, o.seed));
  run.output(out / "manifest.jsonl");
  run.fingerprint("layout", manifest.header.layout_fingerprint);
  run.fingerprint("index", manifest.header.index_fingerprint);
  run.fingerprint("manifest", manifest_fingerprint(manifest));
  run.extra()["samples"] = samples.size();
  run.extra()["samples_uncapped"] = uncapped;

  const auto issues = validate_manifest(manifest, layout, index.records(), index.sar_validity_threshold());
  run.extra()["validation_issues"] = issues.size();
  run.write(out);
  for (const auto& issue : issues) spdlog::error("record {} ({}): {}", issue.record, issue.sample_id, issue.message);
  std::cout << "samples " << samples.size() << " (uncapped " << uncapped << "), validation issues " << issues.size()
            << '\n';
  if (!issues.empty()) throw Error(ErrorCode::InvalidValue, "manifest failed independent validation");
  return 0;
}

int cmd_gapfill(const Options& o) {
  require(!o.manifest.empty(), "--manifest is required");
  require(!o.rasters.empty(), "--rasters is required");
  const auto backend = parse_backend(o.backend);
  require(backend.has_value(), "--backend must be gapfill_linear or external");
  require(*backend != Backend::External || !o.predictions.empty(), "--backend external needs --predictions");
  const fs::path out = prepare_out(o);
  RunRecord run("gapfill");
  run.input("manifest", o.manifest);
  run.input("rasters", o.rasters);
  const Manifest manifest = read_manifest(o.manifest);
  BackendOptions opts;
  opts.before_item = o.before_item;
  opts.after_item = o.after_item;
  opts.jobs = o.jobs;
  if (!o.predictions.empty()) {
    opts.external_predictions = o.predictions;
    run.input("predictions", o.predictions);
  }
  const RunSummary summary = run_backend(*backend, manifest, o.rasters, out, opts);
  run.output(backend_output_dir(out, *backend));
  run.fingerprint("manifest", summary.manifest_fingerprint);
  run.write(out);
  std::cout << summary.backend << ": " << summary.sample_count << " predictions, " << summary.warnings.size()
            << " warnings\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  require(!o.manifest.empty(), "--manifest is required");
  require(!o.predictions.empty(), "--predictions is required");
  require(!o.rasters.empty(), "--rasters is required");
  const fs::path out = prepare_out(o);
  RunRecord run("evaluate");
  run.input("manifest", o.manifest);
  run.input("predictions", o.predictions);
  run.input("rasters", o.rasters);
  MetricsConfig cfg;
  cfg.peak = o.peak;
  cfg.validate();
  const Manifest manifest = read_manifest(o.manifest);
  const MetricsReport report = evaluate(manifest, o.predictions, o.rasters, cfg, o.jobs);
  write_report_csv(out / "report.csv", report);
  write_report_json(out / "report.json", report);
  run.output(out / "report.csv");
  run.output(out / "report.json");
  run.fingerprint("manifest", manifest_fingerprint(manifest));
  run.write(out);
  std::cout << "n " << report.n << "  MSE " << report.mse << "  PSNR " << report.psnr_db << " dB  SSIM " << report.ssim
            << "  SAM " << report.sam_rad << " rad\n";
  return 0;
}

int cmd_layout(const Options& o) {
  require(!o.layout.empty(), "--layout is required");
  const AcquisitionsLayout layout = resolve_layout(o.layout);
  std::cout << print_layout(layout);
  return 0;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("acqlayout");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("ACQLAYOUT_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  Options o;
  CLI::App app{"Acquisition-layout dataset builder for S1/S2 patch archives"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ACQLAYOUT_VERSION);

  const auto add_jobs = [&](CLI::App* c) {
    c->add_option("--jobs", o.jobs, "Worker threads (0 = available cores)");
  };
  const auto add_threshold = [&](CLI::App* c) {
    c->add_option("--sar-valid", o.sar_threshold, "Minimum valid fraction of a usable S1 patch")->check(CLI::Range(0.0, 1.0));
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic S1/S2 archive");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--seed", o.seed, "Random seed")->required();
  synth->add_option("--tiles", o.synth.n_tiles, "Number of tiles");
  synth->add_option("--rows", o.synth.grid_rows, "Patch rows per tile");
  synth->add_option("--cols", o.synth.grid_cols, "Patch columns per tile");
  synth->add_option("--start", o.synth.start, "First acquisition (Unix seconds)");
  synth->add_option("--days", o.synth_days, "Length of the time series in days");
  synth->add_option("--s2-revisit", o.s2_revisit_days, "S2 revisit in days");
  synth->add_option("--s1-revisit", o.s1_revisit_days, "S1 revisit in days");
  synth->add_option("--s1-phase", o.s1_phase_hours, "S1 schedule offset in hours");
  synth->add_option("--cloud-probability", o.synth.cloud_probability, "Mean cloud fraction")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--trend", o.trend, "constant, linear or seasonal-sine");
  synth->add_option("--patch-size", o.synth.patch_size, "Patch edge in pixels");
  synth->add_flag("--sudden-change", o.synth.sudden_change, "Plant a step change before the reference date");
  synth->add_option("--partial-valid", o.synth.partial_valid_probability, "Probability of a no-data stripe")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_flag("--no-plant", o.no_plant, "Do not force a layout-satisfying pattern per location");
  synth->add_flag("--no-rasters", o.no_rasters, "Write metadata and truth only");
  add_jobs(synth);

  auto* ingest = app.add_subcommand("ingest", "Validate metadata and write it in canonical form");
  ingest->add_option("--metadata", o.metadata, "Metadata CSV")->required();
  ingest->add_option("--out", o.out, "Output directory")->required();

  auto* stats = app.add_subcommand("stats", "Nearest-SAR gap histogram and clear-sky coverage");
  stats->add_option("--metadata", o.metadata, "Metadata CSV")->required();
  stats->add_option("--out", o.out, "Optional output directory for stats.json");
  stats->add_option("--bin-hours", o.bin_hours, "Histogram bin width in hours")->check(CLI::PositiveNumber);
  add_threshold(stats);

  auto* index = app.add_subcommand("index", "Build and save the spatial index");
  index->add_option("--metadata", o.metadata, "Metadata CSV")->required();
  index->add_option("--out", o.out, "Output directory")->required();
  add_threshold(index);

  auto* split = app.add_subcommand("split", "Assign locations to train/val/test");
  split->add_option("--metadata", o.metadata, "Metadata CSV")->required();
  split->add_option("--out", o.out, "Output directory")->required();
  split->add_option("--seed", o.seed, "Random seed")->required();
  split->add_option("--fractions", o.fractions, "train,val,test fractions");

  auto* query = app.add_subcommand("query", "Resolve the samples of a layout into a manifest");
  query->add_option("--metadata", o.metadata, "Metadata CSV")->required();
  query->add_option("--index", o.index, "Saved index (must match the metadata)");
  query->add_option("--layout", o.layout, "Layout file or builtin name (ssop, msop, msop_cld)")->required();
  query->add_option("--out", o.out, "Output directory")->required();
  query->add_option("--split", o.split, "Restrict to one split: train, val or test");
  query->add_option("--split-file", o.split_file, "split.csv from the split subcommand");
  query->add_option("--cap", o.cap, "Maximum samples per location")->check(CLI::PositiveNumber);
  query->add_option("--seed", o.seed, "Seed of the per-location subsample");
  add_threshold(query);
  add_jobs(query);

  auto* gapfill = app.add_subcommand("gapfill", "Run a reconstruction backend over a manifest");
  gapfill->add_option("--manifest", o.manifest, "manifest.jsonl")->required();
  gapfill->add_option("--rasters", o.rasters, "Raster store")->required();
  gapfill->add_option("--out", o.out, "Output root")->required();
  gapfill->add_option("--backend", o.backend, "gapfill_linear or external");
  gapfill->add_option("--predictions", o.predictions, "Predictions of the external backend");
  gapfill->add_option("--before", o.before_item, "Layout item before the target");
  gapfill->add_option("--after", o.after_item, "Layout item after the target");
  add_jobs(gapfill);

  auto* eval = app.add_subcommand("evaluate", "Score predictions against the target rasters");
  eval->add_option("--manifest", o.manifest, "manifest.jsonl")->required();
  eval->add_option("--predictions", o.predictions, "Prediction directory")->required();
  eval->add_option("--rasters", o.rasters, "Raster store")->required();
  eval->add_option("--out", o.out, "Output directory")->required();
  eval->add_option("--peak", o.peak, "Peak value of the PSNR")->check(CLI::PositiveNumber);
  add_jobs(eval);

  auto* layout = app.add_subcommand("layout", "Parse, check and print a layout in canonical form");
  layout->add_option("--layout", o.layout, "Layout file or builtin name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*ingest) return cmd_ingest(o);
    if (*stats) return cmd_stats(o);
    if (*index) return cmd_index(o);
    if (*split) return cmd_split(o);
    if (*query) return cmd_query(o);
    if (*gapfill) return cmd_gapfill(o);
    if (*eval) return cmd_evaluate(o);
    if (*layout) return cmd_layout(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
