#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace acqlayout {

/// Squared Euclidean distance.
struct SquaredEuclidean {
  template <typename P>
  static auto distance(const P& a, const P& b) { return (a - b).squaredNorm(); }
  template <typename S>
  static S axis_bound(S delta) { return delta * delta; }
};

/// L-infinity distance. In one dimension this is |a - b|, exact for any
/// integer-valued coordinates below 2^53.
struct Chebyshev {
  template <typename P>
  static auto distance(const P& a, const P& b) { return (a - b).cwiseAbs().maxCoeff(); }
  template <typename S>
  static S axis_bound(S delta) { return delta < 0 ? -delta : delta; }
};

/// Static Kd-Tree answering exact nearest-neighbour queries. Ties in distance
/// are resolved with `TieLess` on the stored values, so the answer is unique
/// and independent of build order.
template <typename Scalar, int Dim, typename Value, typename TieLess = std::less<Value>,
          typename Metric = SquaredEuclidean>
class KdTree {
 public:
  using Point = Eigen::Matrix<Scalar, Dim, 1>;

  struct Entry {
    Point point;
    Value value;
  };

  struct Hit {
    const Entry* entry;
    Scalar distance;  // in the units of Metric
  };

  KdTree() = default;

  explicit KdTree(std::vector<Entry> entries, TieLess tie_less = {})
      : entries_(std::move(entries)), tie_less_(std::move(tie_less)) {
    // canonical order first so the median splits are reproducible
    std::sort(entries_.begin(), entries_.end(), [this](const Entry& a, const Entry& b) { return entry_less(a, b, 0); });
    build(0, entries_.size(), 0);
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::optional<Hit> nearest(const Point& query) const {
    if (entries_.empty()) return std::nullopt;
    Hit best{nullptr, std::numeric_limits<Scalar>::infinity()};
    search(0, entries_.size(), 0, query, best);
    return best;
  }

 private:
  bool entry_less(const Entry& a, const Entry& b, int axis) const {
    for (int k = 0; k < Dim; ++k) {
      const int d = (axis + k) % Dim;
      if (a.point[d] != b.point[d]) return a.point[d] < b.point[d];
    }
    return tie_less_(a.value, b.value);
  }

  // Implicit layout: the median of [lo, hi) is the node, halves are subtrees.
  void build(std::size_t lo, std::size_t hi, int depth) {
    if (hi - lo <= 1) return;
    const int axis = depth % Dim;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(entries_.begin() + std::ptrdiff_t(lo), entries_.begin() + std::ptrdiff_t(mid),
                     entries_.begin() + std::ptrdiff_t(hi),
                     [&](const Entry& a, const Entry& b) { return entry_less(a, b, axis); });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void consider(const Entry& e, const Point& q, Hit& best) const {
    const Scalar d = Metric::distance(e.point, q);
    if (best.entry == nullptr || d < best.distance || (d == best.distance && tie_less_(e.value, best.entry->value)))
      best = Hit{&e, d};
  }

  void search(std::size_t lo, std::size_t hi, int depth, const Point& q, Hit& best) const {
    if (lo >= hi) return;
    const int axis = depth % Dim;
    const std::size_t mid = lo + (hi - lo) / 2;
    const Entry& node = entries_[mid];
    consider(node, q, best);

    const Scalar delta = q[axis] - node.point[axis];
    const bool left_first = delta <= 0;
    if (left_first) {
      search(lo, mid, depth + 1, q, best);
    } else {
      search(mid + 1, hi, depth + 1, q, best);
    }
    // the far side can still hold an equally close point that wins the tie
    if (Metric::axis_bound(delta) <= best.distance) {
      if (left_first) {
        search(mid + 1, hi, depth + 1, q, best);
      } else {
        search(lo, mid, depth + 1, q, best);
      }
    }
  }

  std::vector<Entry> entries_;
  TieLess tie_less_;
};

}  // namespace acqlayout
