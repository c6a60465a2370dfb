#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "acqlayout/ingest.hpp"
#include "acqlayout/layout.hpp"
#include "acqlayout/manifest.hpp"
#include "acqlayout/validate.hpp"
#include "oracles.hpp"

using namespace acqlayout;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ACQLAYOUT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new oracle::TempDir("cli");
    ASSERT_EQ(run_cli("synth --out " + q(root() / "archive") +
                      " --seed 5 --tiles 1 --rows 2 --cols 2 --patch-size 16 --days 60"),
              0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path root() { return dir_->path(); }
  static fs::path metadata() { return root() / "archive" / "metadata.csv"; }
  static fs::path rasters() { return root() / "archive" / "rasters"; }

  static void pipeline(const fs::path& out) {
    ASSERT_EQ(run_cli("index --metadata " + q(metadata()) + " --out " + q(out / "index")), 0);
    ASSERT_EQ(run_cli("split --metadata " + q(metadata()) + " --out " + q(out / "split") + " --seed 3"), 0);
    ASSERT_EQ(run_cli("query --metadata " + q(metadata()) + " --index " + q(out / "index" / "index.bin") +
                      " --layout msop_cld --out " + q(out / "query")),
              0);
    ASSERT_EQ(run_cli("gapfill --manifest " + q(out / "query" / "manifest.jsonl") + " --rasters " + q(rasters()) +
                      " --out " + q(out / "pred") + " --jobs 2"),
              0);
    ASSERT_EQ(run_cli("evaluate --manifest " + q(out / "query" / "manifest.jsonl") + " --predictions " +
                      q(out / "pred" / "gapfill_linear") + " --rasters " + q(rasters()) + " --out " + q(out / "eval")),
              0);
  }

  static oracle::TempDir* dir_;
};

oracle::TempDir* CliPipeline::dir_ = nullptr;

}  // namespace

TEST_F(CliPipeline, FullPipelineIsReproducible) {
  const std::string before = slurp(metadata());
  pipeline(root() / "run1");
  pipeline(root() / "run2");
  for (const char* f : {"index/index.bin", "split/split.csv", "query/manifest.jsonl", "eval/report.csv",
                        "eval/report.json"})
    EXPECT_EQ(slurp(root() / "run1" / f), slurp(root() / "run2" / f)) << f;
  EXPECT_FALSE(slurp(root() / "run1" / "eval" / "report.csv").empty());
  for (const char* d : {"index", "split", "query", "pred", "eval"})
    EXPECT_TRUE(fs::exists(root() / "run1" / d / "run.json")) << d;
  EXPECT_EQ(before, slurp(metadata()));
}

TEST_F(CliPipeline, SplitRestrictedManifestValidates) {
  const fs::path out = root() / "split_query";
  ASSERT_EQ(run_cli("split --metadata " + q(metadata()) + " --out " + q(out) + " --seed 9 --fractions 0.5,0,0.5"), 0);
  ASSERT_EQ(run_cli("query --metadata " + q(metadata()) + " --layout msop --split test --split-file " +
                    q(out / "split.csv") + " --out " + q(out / "q")),
            0);
  const Manifest m = read_manifest(out / "q" / "manifest.jsonl");
  const auto records = ingest_metadata(metadata());
  EXPECT_TRUE(validate_manifest(m, builtin::msop(), records).empty());
  for (const auto& r : m.records) EXPECT_EQ(r.split, Split::Test);
}

TEST_F(CliPipeline, IngestAndLayoutCommands) {
  ASSERT_EQ(run_cli("ingest --metadata " + q(metadata()) + " --out " + q(root() / "ing")), 0);
  EXPECT_EQ(ingest_metadata(root() / "ing" / "metadata.csv"), ingest_metadata(metadata()));
  EXPECT_EQ(run_cli("stats --metadata " + q(metadata()) + " --out " + q(root() / "st")), 0);
  EXPECT_TRUE(fs::exists(root() / "st" / "stats.json"));
  EXPECT_EQ(run_cli("layout --layout ssop"), 0);
}

TEST(Cli, ExitCodes) {
  oracle::TempDir dir("cli_err");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("synth --out " + q(dir.path())), 2);
  EXPECT_EQ(run_cli("query --metadata " + q(dir / "missing.csv") + " --layout ssop --out " + q(dir / "o")), 1);
  {
    std::ofstream bad(dir / "bad.layout");
    bad << "item t {\n";
  }
  EXPECT_EQ(run_cli("layout --layout " + q(dir / "bad.layout")), 1);
  EXPECT_EQ(run_cli("synth --out " + q(dir / "s") + " --seed 1 --tiles 0"), 1);
}
