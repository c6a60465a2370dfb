#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acqlayout/patch.hpp"

namespace acqlayout {

class PatchIndex;

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kDefaultMaxSarGap = 72 * kSecondsPerHour;

enum class ItemRole { Input, Target };

/// Closed window [lo, hi] in seconds relative to the reference acquisition.
struct TimeWindow {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  bool contains(std::int64_t offset) const { return lo <= offset && offset <= hi; }
  bool operator==(const TimeWindow&) const = default;
};

/// One optical acquisition required by a layout, optionally paired with SAR.
struct AcquisitionItem {
  std::string name;
  bool needs_sar = false;
  std::int64_t max_sar_gap = kDefaultMaxSarGap;  // seconds; meaningful when needs_sar
  double cloud_lo = 0.0;                         // fractions in [0,1]
  double cloud_hi = 1.0;
  std::optional<TimeWindow> window;  // nullopt: this item is the reference
  bool overlapping = false;          // window may contain the reference date
  double min_valid_fraction = 1.0;
  ItemRole role = ItemRole::Input;

  bool is_reference() const { return !window.has_value(); }
  bool operator==(const AcquisitionItem&) const = default;
};

struct AcquisitionsLayout {
  std::string name;
  std::vector<AcquisitionItem> items;
  int patch_size = kDefaultPatchSize;

  const AcquisitionItem& reference() const;
  const AcquisitionItem& target() const;
  const AcquisitionItem* find(std::string_view item_name) const;

  bool operator==(const AcquisitionsLayout&) const = default;
};

/// Parses and validates a layout document. Throws SyntaxError (with line),
/// NoReferenceItem, DuplicateItemName or InvalidRange (with field).
AcquisitionsLayout parse_layout(std::string_view text);
AcquisitionsLayout load_layout(const std::filesystem::path& file);

/// Checks every item and layout invariant; parse_layout calls this.
void validate_layout(const AcquisitionsLayout& layout);

/// Canonical text form; parse_layout(print_layout(l)) == l.
std::string print_layout(const AcquisitionsLayout& layout);

std::string layout_fingerprint(const AcquisitionsLayout& layout);

/// Built-in layouts of the three reference datasets.
namespace builtin {
std::string_view ssop_text();      // single SAR/optical pair
std::string_view msop_text();      // t-1, t, t+1 pairs, any clouds
std::string_view msop_cld_text();  // clean t-1/t+1, overcast t
AcquisitionsLayout ssop();
AcquisitionsLayout msop();
AcquisitionsLayout msop_cld();
std::vector<AcquisitionsLayout> all();
}  // namespace builtin

struct ItemFeasibility {
  std::string item;
  std::size_t candidates = 0;  // S2 patches archive-wide meeting cloud/valid/SAR constraints
  bool feasible = false;
};

struct FeasibilityReport {
  std::vector<ItemFeasibility> items;
  /// Pairs of items whose closed windows share at least one instant (the
  /// reference item counts as the window [0, 0]), boundary contact included.
  std::vector<std::pair<std::string, std::string>> window_overlaps;

  bool feasible() const;
};

FeasibilityReport validate_layout_against_archive(const AcquisitionsLayout& layout, const PatchIndex& index);

}  // namespace acqlayout
