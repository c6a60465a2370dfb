#include <algorithm>
#include <fstream>

#include <gtest/gtest.h>

#include "acqlayout/error.hpp"
#include "acqlayout/spatial_index.hpp"
#include "oracles.hpp"

using namespace acqlayout;
using oracle::s1;
using oracle::s2;

namespace {

const PatchKey kA{"T", 0, 0};
const PatchKey kB{"T", 0, 1};

std::vector<std::string> ids(const std::vector<IndexedPatch>& hits) {
  std::vector<std::string> out;
  for (const auto& h : hits) out.push_back(h.stat.patch_id);
  return out;
}

BoxQuery random_box(SplitMix& rng, std::int64_t t0, std::int64_t span) {
  BoxQuery q;
  const auto pick = [&](double a, double b) {
    return a <= b ? Interval{a, b} : Interval{b, a};
  };
  static constexpr double kCloudEdges[] = {0.0, 0.25, 0.5, 1.0};
  if (rng.below(4)) q.cloud = pick(rng.below(2) ? kCloudEdges[rng.below(4)] : rng.uniform(), kCloudEdges[rng.below(4)]);
  if (rng.below(4)) {
    const double a = double(t0 + std::int64_t(rng.below(std::uint64_t(span / 86400))) * 86400);
    const double b = double(t0 + std::int64_t(rng.below(std::uint64_t(span / 86400))) * 86400);
    q.time = pick(a, b);
  }
  if (rng.below(3)) q.sar_gap = {0.0, double(rng.below(8)) * 86400.0};
  if (rng.below(4) == 0) q.valid = {0.95, 1.0};
  return q;
}

}  // namespace

TEST(SpatialIndex, EmptyIndex) {
  const PatchIndex index = build_index({});
  EXPECT_TRUE(index.locations().empty());
  EXPECT_TRUE(box_query(index, kA, {}).empty());
  EXPECT_FALSE(nearest_sar(index, kA, 0).has_value());
}

TEST(SpatialIndex, NoSarMeansInfiniteGap) {
  const PatchIndex index = build_index({s2(kA, 10, 0, 1, "a"), s2(kA, 20, 0, 1, "b")});
  for (const auto& p : index.s2_patches(kA)) EXPECT_EQ(p.sar_gap_seconds, kInfinity);
}

TEST(SpatialIndex, SingleSarCandidate) {
  const PatchIndex index = build_index({s1(kA, 0, 1, "s1"), s2(kA, 3600, 0, 1, "s2")});
  ASSERT_EQ(index.s2_patches(kA).size(), 1u);
  EXPECT_EQ(index.s2_patches(kA)[0].sar_gap_seconds, 3600.0);
  const auto m = nearest_sar(index, kA, 3600);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->patch_id, "s1");
}

TEST(SpatialIndex, EquidistantSarPrefersEarlier) {
  const PatchIndex index = build_index({s1(kA, 10000 + 3600, 1, "late"), s1(kA, 10000 - 3600, 1, "early")});
  const auto m = nearest_sar(index, kA, 10000);
  ASSERT_TRUE(m);
  EXPECT_EQ(m->patch_id, "early");
  EXPECT_EQ(m->gap_seconds, 3600.0);
}

TEST(SpatialIndex, SameTimeSarPrefersSmallerId) {
  const PatchIndex index = build_index({s1(kA, 50, 1, "zz"), s1(kA, 50, 1, "aa")});
  EXPECT_EQ(nearest_sar(index, kA, 0)->patch_id, "aa");
}

TEST(SpatialIndex, InvalidSarIgnoredAndThresholdApplies) {
  const std::vector<PatchStat> recs{s1(kA, 0, 0.7, "partial"), s1(kA, 1000, 1.0, "full"), s2(kA, 10, 0, 1, "x")};
  EXPECT_EQ(nearest_sar(build_index(recs), kA, 10)->patch_id, "full");
  EXPECT_EQ(nearest_sar(build_index(recs, 0.5), kA, 10)->patch_id, "partial");
}

TEST(SpatialIndex, DegenerateCloudBoxOverCloudyLocation) {
  const PatchIndex index = build_index({s2(kA, 1, 0.5, 1, "a"), s2(kA, 2, 1.0, 1, "b")});
  BoxQuery q;
  q.cloud = {0, 0};
  EXPECT_TRUE(box_query(index, kA, q).empty());
  EXPECT_EQ(ids(box_query(index, kA, {})), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(box_query(index, kB, {}).empty());
}

TEST(SpatialIndex, ResultsSortedByTimeThenId) {
  const PatchIndex index =
      build_index({s2(kA, 5, 0, 1, "b"), s2(kA, 5, 0, 1, "a"), s2(kA, 1, 0, 1, "z"), s2(kB, 0, 0, 1, "other")});
  EXPECT_EQ(ids(box_query(index, kA, {})), (std::vector<std::string>{"z", "a", "b"}));
}

TEST(SpatialIndex, BoxAndNearestMatchLinearScan) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto recs = oracle::random_archive(seed, {.locations = 6, .max_acquisitions = 80});
    const PatchIndex index = build_index(recs);
    SplitMix rng(seed * 7919);
    for (const auto& key : index.locations()) {
      for (const auto& p : index.s2_patches(key))
        ASSERT_EQ(p.sar_gap_seconds, oracle::sar_gap_scan(recs, key, p.stat.timestamp));
      for (int q = 0; q < 40; ++q) {
        const BoxQuery box = random_box(rng, 1'500'000'000, 90 * 86400);
        ASSERT_EQ(ids(box_query(index, key, box)), oracle::box_scan(recs, key, box));
        const std::int64_t t = 1'500'000'000 - 86400 + std::int64_t(rng.below(92)) * 86400 + std::int64_t(rng.below(3)) * 3600;
        ASSERT_EQ(nearest_sar(index, key, t), oracle::nearest_sar_scan(recs, key, t));
      }
    }
  }
}

TEST(SpatialIndex, EnlargingABoxNeverRemovesResults) {
  const auto recs = oracle::random_archive(5, {.locations = 3, .max_acquisitions = 60});
  const PatchIndex index = build_index(recs);
  SplitMix rng(99);
  for (const auto& key : index.locations())
    for (int q = 0; q < 50; ++q) {
      BoxQuery small = random_box(rng, 1'500'000'000, 90 * 86400);
      BoxQuery big = small;
      big.cloud.lo = std::max(0.0, big.cloud.lo - 0.1);
      big.time.hi += 3 * 86400;
      big.sar_gap.hi *= 2;
      big.valid.lo = 0.0;
      const auto a = ids(box_query(index, key, small));
      const auto b = ids(box_query(index, key, big));
      for (const auto& id : a) ASSERT_NE(std::find(b.begin(), b.end(), id), b.end());
    }
}

TEST(SpatialIndex, PermutedInputGivesSameIndex) {
  auto recs = oracle::random_archive(3, {.locations = 5, .max_acquisitions = 50});
  const PatchIndex a = build_index(recs);
  std::reverse(recs.begin(), recs.end());
  std::rotate(recs.begin(), recs.begin() + recs.size() / 3, recs.end());
  const PatchIndex b = build_index(recs);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  for (const auto& key : a.locations()) {
    EXPECT_EQ(box_query(a, key, {}), box_query(b, key, {}));
    for (std::int64_t t = 1'499'900'000; t < 1'508'000'000; t += 100'000) EXPECT_EQ(nearest_sar(a, key, t), nearest_sar(b, key, t));
  }
}

TEST(SpatialIndex, EveryS2InExactlyOneLocation) {
  const auto recs = oracle::random_archive(8, {.locations = 7, .max_acquisitions = 40});
  const PatchIndex index = build_index(recs);
  std::size_t total = 0;
  std::set<std::string> seen;
  for (const auto& key : index.locations())
    for (const auto& p : index.s2_patches(key)) {
      ++total;
      EXPECT_EQ(p.stat.key, key);
      EXPECT_TRUE(seen.insert(p.stat.patch_id).second);
    }
  EXPECT_EQ(total, std::size_t(std::count_if(recs.begin(), recs.end(), [](auto& r) { return r.sensor == Sensor::S2; })));
  EXPECT_EQ(index.s2_count(), total);
}

TEST(SpatialIndex, NearestAtOwnTimestampEqualsIndexedGap) {
  const auto recs = oracle::random_archive(12, {.locations = 4, .max_acquisitions = 60});
  const PatchIndex index = build_index(recs);
  for (const auto& key : index.locations())
    for (const auto& p : index.s2_patches(key)) {
      const auto m = nearest_sar(index, key, p.stat.timestamp);
      EXPECT_EQ(m ? m->gap_seconds : kInfinity, p.sar_gap_seconds);
    }
}

TEST(SpatialIndex, PersistenceRoundTrip) {
  oracle::TempDir dir("idx");
  const auto recs = oracle::random_archive(21, {.locations = 4, .max_acquisitions = 40});
  const PatchIndex index = build_index(recs, 0.8);
  index.save(dir / "index.bin");
  const PatchIndex back = PatchIndex::load(dir / "index.bin");
  EXPECT_EQ(back.fingerprint(), index.fingerprint());
  EXPECT_EQ(back.sar_validity_threshold(), 0.8);
  for (const auto& key : index.locations()) EXPECT_EQ(box_query(back, key, {}), box_query(index, key, {}));
}

TEST(SpatialIndex, CorruptIndexFileRejected) {
  oracle::TempDir dir("idxbad");
  std::ofstream(dir / "index.bin", std::ios::binary) << "AIDX garbage";
  EXPECT_THROW(PatchIndex::load(dir / "index.bin"), Error);
}
