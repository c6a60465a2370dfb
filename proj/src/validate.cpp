#include "acqlayout/validate.hpp"

#include <map>
#include <set>
#include <unordered_map>

namespace acqlayout {

std::vector<ValidationIssue> validate_manifest(const Manifest& manifest, const AcquisitionsLayout& layout,
                                               std::span<const PatchStat> records, double sar_validity_threshold) {
  std::vector<ValidationIssue> issues;
  std::unordered_map<std::string, const PatchStat*> by_id;
  std::map<PatchKey, std::vector<const PatchStat*>> valid_s1;
  for (const auto& r : records) {
    by_id.emplace(r.patch_id, &r);
    if (r.sensor == Sensor::S1 && r.valid_fraction >= sar_validity_threshold) valid_s1[r.key].push_back(&r);
  }
  static const std::vector<const PatchStat*> kNone;

  if (manifest.header.layout_name != layout.name)
    issues.push_back({0, "", "manifest layout '" + manifest.header.layout_name + "' is not '" + layout.name + "'"});

  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const Sample& s = manifest.records[i].sample;
    const auto report = [&](const std::string& msg) { issues.push_back({i, s.id(), msg}); };

    if (s.bindings.size() != layout.items.size()) report("binding count differs from layout item count");
    std::set<std::string> used;
    bool repeated = false;

    for (const auto& item : layout.items) {
      const auto it = s.bindings.find(item.name);
      if (it == s.bindings.end()) {
        report("item '" + item.name + "' is unbound");
        continue;
      }
      const ResolvedItem& b = it->second;
      if (!used.insert(b.s2_patch_id).second) repeated = true;

      const auto rec_it = by_id.find(b.s2_patch_id);
      if (rec_it == by_id.end()) {
        report(item.name + ": unknown patch " + b.s2_patch_id);
        continue;
      }
      const PatchStat& rec = *rec_it->second;
      if (rec.sensor != Sensor::S2) report(item.name + ": " + rec.patch_id + " is not an S2 acquisition");
      if (rec.key != s.location) report(item.name + ": " + rec.patch_id + " lies at another location");
      if (rec.timestamp != b.s2_timestamp) report(item.name + ": timestamp differs from metadata");
      const double cloud = rec.cloud_fraction.value_or(0.0);
      if (cloud != b.s2_cloud_fraction) report(item.name + ": cloud fraction differs from metadata");
      if (cloud < item.cloud_lo || cloud > item.cloud_hi) report(item.name + ": cloud fraction outside item range");
      if (rec.valid_fraction < item.min_valid_fraction) report(item.name + ": valid fraction below item minimum");

      const std::int64_t offset = rec.timestamp - s.reference_time;
      if (item.is_reference()) {
        if (offset != 0) report(item.name + ": reference binding is not at reference_time");
      } else if (!item.window->contains(offset)) {
        report(item.name + ": acquisition outside item window");
      }

      // nearest valid S1 by exhaustive scan, ties to the earlier then smaller id
      const PatchStat* best = nullptr;
      std::int64_t best_gap = 0;
      const auto s1_it = valid_s1.find(rec.key);
      for (const PatchStat* cand : s1_it == valid_s1.end() ? kNone : s1_it->second) {
        const std::int64_t gap = cand->timestamp > rec.timestamp ? cand->timestamp - rec.timestamp
                                                                 : rec.timestamp - cand->timestamp;
        if (!best || gap < best_gap ||
            (gap == best_gap && (cand->timestamp < best->timestamp ||
                                 (cand->timestamp == best->timestamp && cand->patch_id < best->patch_id)))) {
          best = cand;
          best_gap = gap;
        }
      }

      if (item.needs_sar) {
        if (!b.s1_patch_id || !b.s1_gap_seconds) {
          report(item.name + ": SAR pair missing");
        } else if (!best || *b.s1_patch_id != best->patch_id) {
          report(item.name + ": SAR pair is not the nearest valid S1 acquisition");
        } else if (*b.s1_gap_seconds != double(best_gap) || best_gap > item.max_sar_gap) {
          report(item.name + ": SAR gap wrong or above the item maximum");
        }
      } else if (b.s1_patch_id || b.s1_gap_seconds) {
        report(item.name + ": unexpected SAR pair");
      }
    }
    if (repeated != s.degenerate) report("degenerate flag does not match bindings");
  }
  return issues;
}

}  // namespace acqlayout
