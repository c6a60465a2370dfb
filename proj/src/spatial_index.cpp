#include "acqlayout/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "acqlayout/fingerprint.hpp"
#include "binary_io.hpp"

namespace acqlayout {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kIndexMagic = "AIDX";
constexpr std::uint32_t kIndexVersion = 1;

bool record_less(const PatchStat& a, const PatchStat& b) { return a.patch_id < b.patch_id; }

}  // namespace

bool BoxQuery::contains(const IndexedPatch& p) const {
  return cloud.contains(p.stat.cloud_fraction.value_or(0.0)) && time.contains(double(p.stat.timestamp)) &&
         sar_gap.contains(p.sar_gap_seconds) && valid.contains(p.stat.valid_fraction);
}

bool PatchIndex::SarTieLess::operator()(const SarKey& a, const SarKey& b) const {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.patch_id < b.patch_id;
}

std::string records_fingerprint(std::span<const PatchStat> records, double sar_validity_threshold) {
  std::vector<const PatchStat*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return record_less(*a, *b); });

  Fingerprint fp;
  fp.text("acqlayout-index").value(sar_validity_threshold).value(records.size());
  for (const auto* r : sorted) {
    fp.text(r->patch_id).text(r->key.tile_id).value(r->key.row).value(r->key.col);
    fp.value(static_cast<int>(r->sensor)).value(r->timestamp);
    fp.value(r->cloud_fraction.has_value() ? 1 : 0).value(r->cloud_fraction.value_or(0.0));
    fp.value(r->valid_fraction);
  }
  return fp.hex();
}

PatchIndex PatchIndex::build(std::vector<PatchStat> records, double sar_validity_threshold) {
  PatchIndex index;
  index.sar_threshold_ = sar_validity_threshold;
  std::sort(records.begin(), records.end(), record_less);
  index.fingerprint_ = records_fingerprint(records, sar_validity_threshold);
  index.records_ = std::move(records);

  using SarTree = KdTree<double, 1, SarKey, SarTieLess, Chebyshev>;
  std::map<PatchKey, std::vector<SarTree::Entry>> sar_entries;
  std::map<PatchKey, std::vector<std::uint32_t>> s2_members;
  for (const auto& r : index.records_) {
    if (r.sensor == Sensor::S1) {
      if (r.valid_fraction >= sar_validity_threshold)
        sar_entries[r.key].push_back({SarTree::Point::Constant(double(r.timestamp)), SarKey{r.timestamp, r.patch_id}});
      else
        sar_entries[r.key];  // location exists even without valid SAR
    } else {
      s2_members[r.key].push_back(static_cast<std::uint32_t>(index.indexed_.size()));
      index.indexed_.push_back(IndexedPatch{r, kInfinity});
    }
  }

  for (auto& [key, entries] : sar_entries) index.locations_[key].s1_tree = SarTree(std::move(entries));

  using S2Tree = RTree<double, 4, std::uint32_t>;
  for (auto& [key, members] : s2_members) {
    Location& loc = index.locations_[key];
    std::vector<S2Tree::Entry> entries;
    entries.reserve(members.size());
    for (std::uint32_t m : members) {
      IndexedPatch& p = index.indexed_[m];
      if (const auto hit = loc.s1_tree.nearest(SarTree::Point::Constant(double(p.stat.timestamp))))
        p.sar_gap_seconds = double(std::abs(hit->entry->value.timestamp - p.stat.timestamp));
      S2Tree::Point pt(p.stat.cloud_fraction.value_or(0.0), double(p.stat.timestamp), p.sar_gap_seconds,
                       p.stat.valid_fraction);
      entries.push_back({pt, m});
    }
    loc.s2_tree = S2Tree(std::move(entries));
    loc.s2_members = std::move(members);
  }
  return index;
}

std::vector<IndexedPatch> PatchIndex::box_query(const PatchKey& location, const BoxQuery& box) const {
  std::vector<IndexedPatch> out;
  const auto it = locations_.find(location);
  if (it == locations_.end()) return out;

  using S2Tree = RTree<double, 4, std::uint32_t>;
  S2Tree::BoxType b;
  b.lo << box.cloud.lo, box.time.lo, box.sar_gap.lo, box.valid.lo;
  b.hi << box.cloud.hi, box.time.hi, box.sar_gap.hi, box.valid.hi;
  it->second.s2_tree.query(b, [&](const S2Tree::Entry& e) { out.push_back(indexed_[e.value]); });

  std::sort(out.begin(), out.end(), [](const IndexedPatch& a, const IndexedPatch& b) {
    if (a.stat.timestamp != b.stat.timestamp) return a.stat.timestamp < b.stat.timestamp;
    return a.stat.patch_id < b.stat.patch_id;
  });
  return out;
}

std::optional<SarMatch> PatchIndex::nearest_sar(const PatchKey& location, std::int64_t t) const {
  const auto it = locations_.find(location);
  if (it == locations_.end()) return std::nullopt;
  const auto hit = it->second.s1_tree.nearest(KdTree<double, 1, SarKey, SarTieLess, Chebyshev>::Point::Constant(double(t)));
  if (!hit) return std::nullopt;
  const SarKey& k = hit->entry->value;
  const auto gap = k.timestamp > t ? k.timestamp - t : t - k.timestamp;
  return SarMatch{k.patch_id, k.timestamp, double(gap)};
}

std::vector<PatchKey> PatchIndex::locations() const {
  std::vector<PatchKey> out;
  out.reserve(locations_.size());
  for (const auto& [key, loc] : locations_) out.push_back(key);
  return out;
}

std::vector<IndexedPatch> PatchIndex::s2_patches(const PatchKey& location) const {
  return box_query(location, BoxQuery{});
}

void PatchIndex::save(const fs::path& file) const {
  detail::ByteWriter w;
  w.put_raw(kIndexMagic);
  w.put<std::uint32_t>(kIndexVersion);
  w.put<double>(sar_threshold_);
  w.put_string(fingerprint_);
  w.put<std::uint64_t>(records_.size());
  for (const auto& r : records_) {
    w.put_string(r.patch_id);
    w.put_string(r.key.tile_id);
    w.put<std::uint32_t>(r.key.row);
    w.put<std::uint32_t>(r.key.col);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(r.sensor));
    w.put<std::int64_t>(r.timestamp);
    w.put<std::uint8_t>(r.cloud_fraction ? 1 : 0);
    w.put<double>(r.cloud_fraction.value_or(0.0));
    w.put<double>(r.valid_fraction);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(w.bytes().data()), std::streamsize(w.bytes().size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + file.string());
}

PatchIndex PatchIndex::load(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, file.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(buf);
  if (r.get_raw(kIndexMagic.size()) != kIndexMagic) throw Error(ErrorCode::CorruptHeader, file.string() + ": bad magic");
  if (r.get<std::uint32_t>() != kIndexVersion) throw Error(ErrorCode::CorruptHeader, file.string() + ": unsupported version");
  const double threshold = r.get<double>();
  const std::string stored_fp = r.get_string();
  const auto n = r.get<std::uint64_t>();
  std::vector<PatchStat> records;
  records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, buf.size())));
  for (std::uint64_t i = 0; i < n; ++i) {
    PatchStat s;
    s.patch_id = r.get_string();
    s.key.tile_id = r.get_string();
    s.key.row = r.get<std::uint32_t>();
    s.key.col = r.get<std::uint32_t>();
    const auto sensor = r.get<std::uint8_t>();
    if (sensor > 1) throw Error(ErrorCode::CorruptHeader, file.string() + ": bad sensor code");
    s.sensor = static_cast<Sensor>(sensor);
    s.timestamp = r.get<std::int64_t>();
    const bool has_cloud = r.get<std::uint8_t>() != 0;
    const double cloud = r.get<double>();
    if (has_cloud) s.cloud_fraction = cloud;
    s.valid_fraction = r.get<double>();
    records.push_back(std::move(s));
  }
  if (!r.at_end()) throw Error(ErrorCode::CorruptHeader, file.string() + ": trailing bytes");
  PatchIndex index = build(std::move(records), threshold);
  if (index.fingerprint() != stored_fp)
    throw Error(ErrorCode::FingerprintMismatch, file.string() + ": stored records do not match stored fingerprint");
  return index;
}

}  // namespace acqlayout
