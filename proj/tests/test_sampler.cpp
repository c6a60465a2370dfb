#include <algorithm>
#include <map>

#include <gtest/gtest.h>

#include "acqlayout/sampler.hpp"
#include "acqlayout/synthgen.hpp"
#include "oracles.hpp"

using namespace acqlayout;
using oracle::s1;
using oracle::s2;

namespace {

const PatchKey kA{"T", 0, 0};
constexpr std::int64_t kDay = 86400;

std::vector<PatchKey> grid_locations(std::size_t n) {
  std::vector<PatchKey> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"G" + std::to_string(i % 7), std::uint32_t(i / 700), std::uint32_t(i % 700)});
  return out;
}

}  // namespace

TEST(Resolve, SingleCleanImageServesBothSsopItems) {
  const PatchIndex index = build_index({s2(kA, 1000, 0.0, 1, "only"), s1(kA, 1000, 1, "sar")});
  const auto samples = resolve_samples(builtin::ssop(), index);
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_TRUE(samples[0].degenerate);
  EXPECT_EQ(samples[0].bindings.at("t").s2_patch_id, "only");
  EXPECT_EQ(samples[0].bindings.at("t'").s2_patch_id, "only");
  EXPECT_EQ(samples[0].bindings.at("t").s1_patch_id, "sar");
  EXPECT_FALSE(samples[0].bindings.at("t'").s1_patch_id.has_value());
}

TEST(Resolve, HalfCloudyReferencesGiveNothingForMsopCld) {
  std::vector<PatchStat> recs;
  for (int d = 0; d < 60; d += 5) {
    recs.push_back(s2(kA, d * kDay, d == 20 ? 0.5 : 0.0, 1, "s2_" + std::to_string(d)));
    recs.push_back(s1(kA, d * kDay, 1, "s1_" + std::to_string(d)));
  }
  EXPECT_TRUE(resolve_samples(builtin::msop_cld(), build_index(recs)).empty());
}

TEST(Resolve, InvalidLayoutIsInfeasible) {
  AcquisitionsLayout bad = builtin::ssop();
  bad.items.pop_back();
  try {
    resolve_samples(bad, build_index({}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleLayout);
  }
}

TEST(Resolve, MatchesExhaustiveEnumeration) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto recs = oracle::random_archive(seed, {.locations = 6, .max_acquisitions = 50, .days = 60});
    const PatchIndex index = build_index(recs);
    for (const auto& layout : builtin::all()) {
      const auto got = oracle::canonical_sorted(resolve_samples(layout, index));
      ASSERT_EQ(got, oracle::enumerate_samples(layout, recs)) << layout.name << " seed " << seed;
    }
  }
}

TEST(Resolve, MatchesEnumerationForOddLayouts) {
  const auto custom = parse_layout(
      "layout odd {\n"
      "  item a { sar = within 30h, clouds = [25,50], when = [-3d,-1d], valid >= 0.9, role = input }\n"
      "  item r { sar = within 2d, clouds = [0,100], when = reference, role = input }\n"
      "  item b { clouds = 0, when = [0d,2d] overlapping, role = target }\n"
      "}\n");
  for (std::uint64_t seed = 100; seed < 115; ++seed) {
    const auto recs = oracle::random_archive(seed, {.locations = 5, .max_acquisitions = 60, .days = 30});
    const PatchIndex index = build_index(recs, 0.5);
    ASSERT_EQ(oracle::canonical_sorted(resolve_samples(custom, index)), oracle::enumerate_samples(custom, recs, 0.5));
  }
}

TEST(Resolve, EverySampleSatisfiesItsLayout) {
  const auto recs = oracle::random_archive(77, {.locations = 8, .max_acquisitions = 50, .days = 60});
  const PatchIndex index = build_index(recs);
  for (const auto& layout : builtin::all())
    for (const auto& s : resolve_samples(layout, index)) {
      ASSERT_EQ(s.bindings.size(), layout.items.size());
      for (const auto& item : layout.items) {
        const auto& b = s.bindings.at(item.name);
        EXPECT_GE(b.s2_cloud_fraction, item.cloud_lo);
        EXPECT_LE(b.s2_cloud_fraction, item.cloud_hi);
        if (item.is_reference()) {
          EXPECT_EQ(b.s2_timestamp, s.reference_time);
        } else {
          EXPECT_TRUE(item.window->contains(b.s2_timestamp - s.reference_time));
        }
        EXPECT_EQ(b.s1_patch_id.has_value(), item.needs_sar);
        if (item.needs_sar) {
          EXPECT_LE(*b.s1_gap_seconds, double(item.max_sar_gap));
        }
        const auto it = std::find_if(recs.begin(), recs.end(), [&](auto& r) { return r.patch_id == b.s2_patch_id; });
        ASSERT_NE(it, recs.end());
        EXPECT_EQ(it->key, s.location);
      }
    }
}

TEST(Resolve, OrderIsLocationThenReferenceThenItems) {
  const auto recs = oracle::random_archive(31, {.locations = 6, .max_acquisitions = 50, .days = 60});
  const auto layout = builtin::msop();
  const auto samples = resolve_samples(layout, build_index(recs));
  ASSERT_FALSE(samples.empty());
  const auto sort_key = [&](const Sample& s) {
    std::vector<std::pair<std::int64_t, std::string>> k;
    for (const auto& item : layout.items) k.emplace_back(s.bindings.at(item.name).s2_timestamp, s.bindings.at(item.name).s2_patch_id);
    return std::tuple(s.location, s.reference_time, k);
  };
  for (std::size_t i = 1; i < samples.size(); ++i) ASSERT_LT(sort_key(samples[i - 1]), sort_key(samples[i]));
}

TEST(Resolve, ResultIndependentOfJobsAndStreaming) {
  const auto recs = oracle::random_archive(9, {.locations = 10, .max_acquisitions = 50, .days = 60});
  const PatchIndex index = build_index(recs);
  const auto one = resolve_samples(builtin::msop(), index, std::nullopt, 1);
  EXPECT_EQ(resolve_samples(builtin::msop(), index, std::nullopt, 4), one);
  std::vector<Sample> streamed;
  for_each_sample(builtin::msop(), index, std::nullopt, [&](Sample&& s) { streamed.push_back(std::move(s)); });
  EXPECT_EQ(streamed, one);
}

TEST(Resolve, RegionRestricts) {
  const auto recs = oracle::random_archive(13, {.locations = 6, .max_acquisitions = 50, .days = 60});
  const PatchIndex index = build_index(recs);
  const auto all = resolve_samples(builtin::ssop(), index);
  Region region{index.locations()[1], PatchKey{"nowhere", 9, 9}};
  const auto some = resolve_samples(builtin::ssop(), index, region);
  std::vector<Sample> expected;
  std::copy_if(all.begin(), all.end(), std::back_inserter(expected), [&](auto& s) { return region.count(s.location); });
  EXPECT_EQ(some, expected);
}

TEST(Resolve, SampleIdsAreUniqueAndStable) {
  const auto recs = oracle::random_archive(15, {.locations = 6, .max_acquisitions = 50, .days = 60});
  const auto samples = resolve_samples(builtin::msop(), build_index(recs));
  std::set<std::string> ids;
  for (const auto& s : samples) EXPECT_TRUE(ids.insert(s.id()).second);
  if (!samples.empty()) {
    EXPECT_EQ(samples[0].id(), Sample(samples[0]).id());
  }
}

TEST(Split, AllTrain) {
  const auto locs = grid_locations(100);
  const auto split = split_geographic(locs, {1.0, 0.0, 0.0}, 5);
  EXPECT_EQ(split.count(Split::Train), 100u);
}

TEST(Split, BadFractions) {
  const auto locs = grid_locations(3);
  for (SplitFractions f : {SplitFractions{0.5, 0.5, 0.5}, SplitFractions{1.2, -0.1, -0.1}, SplitFractions{0.8, 0.1, 0.05}})
    try {
      split_geographic(locs, f, 1);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadFractions);
    }
  EXPECT_THROW(parse_fractions("0.8,0.2"), Error);
  EXPECT_EQ(parse_fractions("0.8,0.05,0.15"), (SplitFractions{0.8, 0.05, 0.15}));
}

TEST(Split, ExclusiveExhaustiveDeterministicAndOrderFree) {
  auto locs = grid_locations(10000);
  const auto a = split_geographic(locs, {}, 42);
  EXPECT_EQ(a.assignment.size(), locs.size());
  EXPECT_EQ(a.count(Split::Train) + a.count(Split::Val) + a.count(Split::Test), locs.size());
  EXPECT_NEAR(double(a.count(Split::Train)) / 1e4, 0.80, 0.02);
  EXPECT_NEAR(double(a.count(Split::Val)) / 1e4, 0.05, 0.02);
  EXPECT_NEAR(double(a.count(Split::Test)) / 1e4, 0.15, 0.02);
  std::reverse(locs.begin(), locs.end());
  const auto b = split_geographic(locs, {}, 42);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_NE(split_geographic(locs, {}, 43).assignment, a.assignment);
  const Region train = a.region(Split::Train), test = a.region(Split::Test);
  for (const auto& k : test) EXPECT_EQ(train.count(k), 0u);
}

TEST(Split, FileRoundTrip) {
  oracle::TempDir dir("split");
  const auto split = split_geographic(grid_locations(500), {0.7, 0.1, 0.2}, 9);
  write_split(dir / "split.csv", split);
  const auto back = read_split(dir / "split.csv");
  EXPECT_EQ(back.assignment, split.assignment);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.fractions, split.fractions);
}

TEST(Cap, SmallLocationsPassUnchanged) {
  const auto recs = oracle::random_archive(4, {.locations = 6, .max_acquisitions = 12, .days = 60});
  const auto samples = resolve_samples(builtin::ssop(), build_index(recs));
  EXPECT_EQ(cap_per_location(samples, 1000, 1), samples);
}

TEST(Cap, LimitsDeterministicallyAndKeepsOrder) {
  SynthSpec spec;
  spec.n_tiles = 1;
  spec.grid_rows = 2;
  spec.grid_cols = 2;
  spec.cloud_probability = 0.2;
  spec.end = spec.start + 200 * kDay;
  spec.write_rasters = false;
  const PatchIndex index = build_index(simulate(spec).records);
  const auto all = resolve_samples(builtin::ssop(), index);
  std::map<PatchKey, std::size_t> before;
  for (const auto& s : all) ++before[s.location];
  ASSERT_GT(std::max_element(before.begin(), before.end(), [](auto& a, auto& b) { return a.second < b.second; })->second, 50u);

  const auto capped = cap_per_location(all, 50, 7);
  EXPECT_EQ(capped, cap_per_location(all, 50, 7));
  EXPECT_NE(capped, cap_per_location(all, 50, 8));
  std::map<PatchKey, std::size_t> after;
  for (const auto& s : capped) ++after[s.location];
  for (const auto& [k, n] : after) EXPECT_EQ(n, std::min<std::size_t>(50, before[k]));
  // subsequence of the uncapped stream
  std::size_t j = 0;
  for (const auto& s : all)
    if (j < capped.size() && s == capped[j]) ++j;
  EXPECT_EQ(j, capped.size());
  EXPECT_THROW(cap_per_location(all, 0, 1), Error);
}

TEST(Cap, SubsampleIsRoughlyUniform) {
  std::vector<Sample> samples(120);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].location = kA;
    samples[i].reference_time = std::int64_t(i);
  }
  std::vector<int> hits(120, 0);
  for (std::uint64_t seed = 0; seed < 600; ++seed)
    for (const auto& s : cap_per_location(samples, 50, seed)) ++hits[std::size_t(s.reference_time)];
  // each sample kept with probability 50/120: 250 expected hits out of 600
  for (int h : hits) EXPECT_NEAR(h, 250, 65);
}
