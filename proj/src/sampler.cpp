#include "acqlayout/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "acqlayout/error.hpp"
#include "acqlayout/fingerprint.hpp"
#include "acqlayout/parallel.hpp"

namespace acqlayout {

namespace fs = std::filesystem;

std::string Sample::id() const {
  Fingerprint fp;
  fp.text(location.tile_id).value(location.row).value(location.col).value(reference_time);
  for (const auto& [name, b] : bindings) fp.text(name).text(b.s2_patch_id).text(b.s1_patch_id.value_or(""));
  return location.tile_id + "_" + std::to_string(location.row) + "_" + std::to_string(location.col) + "_" +
         std::to_string(reference_time) + "_" + fp.hex().substr(0, 10);
}

namespace {

BoxQuery item_box(const AcquisitionItem& item) {
  BoxQuery box;
  box.cloud = {item.cloud_lo, item.cloud_hi};
  box.valid = {item.min_valid_fraction, 1.0};
  box.sar_gap = {0.0, item.needs_sar ? double(item.max_sar_gap) : kInfinity};
  return box;
}

ResolvedItem bind(const IndexedPatch& p, const AcquisitionItem& item, const PatchIndex& index) {
  ResolvedItem r{p.stat.patch_id, p.stat.timestamp, p.stat.cloud_fraction.value_or(0.0), std::nullopt, std::nullopt};
  if (item.needs_sar) {
    const auto sar = index.nearest_sar(p.stat.key, p.stat.timestamp);
    // the box already bounded the indexed gap, so a match exists
    r.s1_patch_id = sar->patch_id;
    r.s1_gap_seconds = sar->gap_seconds;
  }
  return r;
}

void resolve_location(const AcquisitionsLayout& layout, const PatchIndex& index, const PatchKey& location,
                      const std::function<void(Sample&&)>& sink) {
  const std::size_t n_items = layout.items.size();
  std::size_t ref_pos = 0;
  while (!layout.items[ref_pos].is_reference()) ++ref_pos;
  const AcquisitionItem& ref_item = layout.items[ref_pos];

  for (const IndexedPatch& ref : index.box_query(location, item_box(ref_item))) {
    const std::int64_t t0 = ref.stat.timestamp;
    std::vector<std::vector<IndexedPatch>> candidates(n_items);
    bool empty = false;
    for (std::size_t i = 0; i < n_items && !empty; ++i) {
      if (i == ref_pos) {
        candidates[i] = {ref};
        continue;
      }
      const auto& item = layout.items[i];
      BoxQuery box = item_box(item);
      box.time = {double(t0 + item.window->lo), double(t0 + item.window->hi)};
      candidates[i] = index.box_query(location, box);
      empty = candidates[i].empty();
    }
    if (empty) continue;

    std::vector<std::vector<ResolvedItem>> bound(n_items);
    for (std::size_t i = 0; i < n_items; ++i)
      for (const auto& c : candidates[i]) bound[i].push_back(bind(c, layout.items[i], index));

    // odometer over the Cartesian product, last item varying fastest
    std::vector<std::size_t> pick(n_items, 0);
    for (;;) {
      Sample s;
      s.location = location;
      s.reference_time = t0;
      std::set<std::string_view> used;
      for (std::size_t i = 0; i < n_items; ++i) {
        const ResolvedItem& r = bound[i][pick[i]];
        if (!used.insert(r.s2_patch_id).second) s.degenerate = true;
        s.bindings.emplace(layout.items[i].name, r);
      }
      sink(std::move(s));

      std::size_t k = n_items;
      while (k > 0 && ++pick[k - 1] == bound[k - 1].size()) {
        pick[k - 1] = 0;
        --k;
      }
      if (k == 0) break;
    }
  }
}

std::vector<PatchKey> selected_locations(const PatchIndex& index, const std::optional<Region>& region) {
  std::vector<PatchKey> out;
  for (auto& key : index.locations())
    if (!region || region->contains(key)) out.push_back(std::move(key));
  return out;
}

}  // namespace

void for_each_sample(const AcquisitionsLayout& layout, const PatchIndex& index, const std::optional<Region>& region,
                     const std::function<void(Sample&&)>& sink) {
  validate_layout(layout);
  for (const auto& loc : selected_locations(index, region)) resolve_location(layout, index, loc, sink);
}

std::vector<Sample> resolve_samples(const AcquisitionsLayout& layout, const PatchIndex& index,
                                    const std::optional<Region>& region, unsigned jobs) {
  try {
    validate_layout(layout);
  } catch (const Error& e) {
    throw Error(ErrorCode::InfeasibleLayout, e.what());
  }
  const auto locations = selected_locations(index, region);
  std::vector<std::vector<Sample>> per_location(locations.size());
  parallel_for(locations.size(), jobs, [&](std::size_t i) {
    resolve_location(layout, index, locations[i], [&](Sample&& s) { per_location[i].push_back(std::move(s)); });
  });
  std::vector<Sample> out;
  for (auto& v : per_location) std::move(v.begin(), v.end(), std::back_inserter(out));
  return out;
}

// ---------------------------------------------------------------- splits

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val" || s == "validation") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

SplitFractions parse_fractions(std::string_view text) {
  std::vector<double> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(',', start);
    auto piece = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    double v;
    const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
    if (ec != std::errc{} || ptr != piece.data() + piece.size())
      throw Error(ErrorCode::BadFractions, "cannot parse '" + std::string(text) + "'");
    parts.push_back(v);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (parts.size() != 3) throw Error(ErrorCode::BadFractions, "expected train,val,test");
  return {parts[0], parts[1], parts[2]};
}

Split SplitAssignment::at(const PatchKey& key) const {
  const auto it = assignment.find(key);
  if (it == assignment.end()) throw Error(ErrorCode::InvalidValue, "location " + to_string(key) + " has no split");
  return it->second;
}

Region SplitAssignment::region(Split split) const {
  Region r;
  for (const auto& [key, s] : assignment)
    if (s == split) r.insert(key);
  return r;
}

std::size_t SplitAssignment::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(assignment.begin(), assignment.end(), [&](const auto& kv) { return kv.second == split; }));
}

SplitAssignment split_geographic(std::span<const PatchKey> locations, const SplitFractions& f, std::uint64_t seed) {
  const auto ok = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!ok(f.train) || !ok(f.val) || !ok(f.test) || std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
    throw Error(ErrorCode::BadFractions, "fractions must be in [0,1] and sum to 1");

  SplitAssignment out;
  out.fractions = f;
  out.seed = seed;
  for (const auto& key : locations) {
    Fingerprint fp;
    fp.text("split").value(seed).text(key.tile_id).value(key.row).value(key.col);
    const double u = unit_interval(mix64(fp.digest()));
    Split s = Split::Test;
    if (u < f.train) {
      s = Split::Train;
    } else if (u < f.train + f.val) {
      s = Split::Val;
    } else if (f.test == 0.0) {
      s = f.val > 0.0 ? Split::Val : Split::Train;  // rounding slack at the top of [0,1)
    }
    out.assignment[key] = s;
  }
  return out;
}

void write_split(const fs::path& file, const SplitAssignment& split) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  char buf[64];
  const auto fmt = [&](double v) {
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
  };
  out << "# seed=" << split.seed << " fractions=" << fmt(split.fractions.train) << ',' << fmt(split.fractions.val)
      << ',' << fmt(split.fractions.test) << '\n';
  out << "tile_id,row,col,split\n";
  for (const auto& [key, s] : split.assignment)
    out << key.tile_id << ',' << key.row << ',' << key.col << ',' << to_string(s) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + file.string());
}

SplitAssignment read_split(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::MissingFile, file.string());
  SplitAssignment out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# seed=", 0) == 0) {
      const auto sp = line.find(" fractions=");
      if (sp == std::string::npos) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no));
      out.seed = std::stoull(line.substr(7, sp - 7));
      out.fractions = parse_fractions(line.substr(sp + 11));
      continue;
    }
    if (!header) {
      if (line != "tile_id,row,col,split") throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad header");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string tile, row, col, split;
    if (!std::getline(ss, tile, ',') || !std::getline(ss, row, ',') || !std::getline(ss, col, ',') ||
        !std::getline(ss, split))
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no));
    const auto s = parse_split(split);
    if (!s) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": unknown split");
    PatchKey key{tile, 0, 0};
    try {
      key.row = static_cast<std::uint32_t>(std::stoul(row));
      key.col = static_cast<std::uint32_t>(std::stoul(col));
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad row/col");
    }
    out.assignment[key] = *s;
  }
  return out;
}

// ---------------------------------------------------------------- capping

std::vector<Sample> cap_per_location(std::vector<Sample> samples, std::size_t cap, std::uint64_t seed) {
  if (cap == 0) throw Error(ErrorCode::InvalidValue, "cap must be >= 1");
  std::map<PatchKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].location].push_back(i);

  std::vector<bool> keep(samples.size(), true);
  for (auto& [key, members] : groups) {
    if (members.size() <= cap) continue;
    Fingerprint fp;
    fp.text("cap").value(seed).text(key.tile_id).value(key.row).value(key.col);
    SplitMix rng(fp.digest());
    // partial Fisher-Yates: the first `cap` slots become a uniform subset
    std::vector<std::size_t> order = members;
    for (std::size_t i = 0; i < cap; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(order.size() - i));
      std::swap(order[i], order[j]);
    }
    for (std::size_t i = cap; i < order.size(); ++i) keep[order[i]] = false;
  }
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (keep[i]) out.push_back(std::move(samples[i]));
  return out;
}

}  // namespace acqlayout
