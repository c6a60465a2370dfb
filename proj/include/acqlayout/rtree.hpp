#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace acqlayout {

/// Closed axis-aligned box.
template <typename Scalar, int Dim>
struct Box {
  using Point = Eigen::Matrix<Scalar, Dim, 1>;

  Point lo = Point::Constant(std::numeric_limits<Scalar>::infinity());
  Point hi = Point::Constant(-std::numeric_limits<Scalar>::infinity());

  static Box everything() {
    return {Point::Constant(-std::numeric_limits<Scalar>::infinity()),
            Point::Constant(std::numeric_limits<Scalar>::infinity())};
  }

  bool contains(const Point& p) const { return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all(); }
  bool intersects(const Box& o) const { return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all(); }
  bool covers(const Box& o) const { return (lo.array() <= o.lo.array()).all() && (o.hi.array() <= hi.array()).all(); }

  void expand(const Point& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Box& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
};

/// Static point R-Tree, bulk-loaded with Sort-Tile-Recursive packing.
///
/// Entries are immutable after construction; queries are const and may run
/// concurrently. Packing uses stable sorts, so the tree shape only depends on
/// the order of the input for entries with identical coordinates.
template <typename Scalar, int Dim, typename Value>
class RTree {
 public:
  using BoxType = Box<Scalar, Dim>;
  using Point = typename BoxType::Point;

  struct Entry {
    Point point;
    Value value;
  };

  RTree() = default;

  explicit RTree(std::vector<Entry> entries, std::size_t node_capacity = 16)
      : capacity_(std::max<std::size_t>(node_capacity, 2)), entries_(std::move(entries)) {
    build();
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t node_count() const { return nodes_.size(); }

  /// Height of the tree, leaves included; zero for an empty tree.
  int height() const { return height_; }

  /// Calls `visit(const Entry&)` for every entry inside `box`.
  template <typename Visitor>
  void query(const BoxType& box, Visitor&& visit) const {
    if (nodes_.empty()) return;
    std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(nodes_.size() - 1)};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (!box.intersects(n.box)) continue;
      if (n.leaf) {
        const bool all_inside = box.covers(n.box);
        for (std::uint32_t i = n.first; i < n.first + n.count; ++i)
          if (all_inside || box.contains(entries_[i].point)) visit(entries_[i]);
      } else {
        for (std::uint32_t c = n.first; c < n.first + n.count; ++c) stack.push_back(c);
      }
    }
  }

  std::vector<Value> query(const BoxType& box) const {
    std::vector<Value> out;
    query(box, [&](const Entry& e) { out.push_back(e.value); });
    return out;
  }

 private:
  struct Node {
    BoxType box;
    std::uint32_t first = 0;  // first entry (leaf) or first child node
    std::uint32_t count = 0;
    bool leaf = true;
  };

  // Orders `items` (each with a representative point) so that consecutive
  // runs of `capacity_` items form spatially compact groups.
  template <typename Item, typename CenterOf>
  void str_order(std::span<Item> items, int dim, CenterOf center) const {
    if (dim >= Dim || items.size() <= capacity_) return;
    std::stable_sort(items.begin(), items.end(),
                     [&](const Item& a, const Item& b) { return center(a)[dim] < center(b)[dim]; });
    const double groups = std::ceil(double(items.size()) / double(capacity_));
    const auto slabs = static_cast<std::size_t>(std::ceil(std::pow(groups, 1.0 / double(Dim - dim))));
    const std::size_t per_slab =
        capacity_ * static_cast<std::size_t>(std::ceil(groups / double(std::max<std::size_t>(slabs, 1))));
    for (std::size_t start = 0; start < items.size(); start += per_slab) {
      const std::size_t len = std::min(per_slab, items.size() - start);
      str_order(items.subspan(start, len), dim + 1, center);
    }
  }

  void build() {
    nodes_.clear();
    height_ = 0;
    if (entries_.empty()) return;

    str_order(std::span<Entry>(entries_), 0, [](const Entry& e) -> const Point& { return e.point; });
    for (std::size_t start = 0; start < entries_.size(); start += capacity_) {
      Node n;
      n.first = static_cast<std::uint32_t>(start);
      n.count = static_cast<std::uint32_t>(std::min(capacity_, entries_.size() - start));
      for (std::uint32_t i = n.first; i < n.first + n.count; ++i) n.box.expand(entries_[i].point);
      nodes_.push_back(n);
    }
    height_ = 1;

    std::size_t level_begin = 0;
    std::size_t level_end = nodes_.size();
    while (level_end - level_begin > 1) {
      // pack this level's nodes by their box centers, then group them
      std::vector<Node> level(nodes_.begin() + std::ptrdiff_t(level_begin), nodes_.begin() + std::ptrdiff_t(level_end));
      std::vector<std::pair<Point, Node>> keyed;
      keyed.reserve(level.size());
      for (const Node& n : level) keyed.emplace_back(center_of(n.box), n);
      str_order(std::span(keyed), 0, [](const std::pair<Point, Node>& k) -> const Point& { return k.first; });
      for (std::size_t i = 0; i < keyed.size(); ++i) nodes_[level_begin + i] = keyed[i].second;

      for (std::size_t start = level_begin; start < level_end; start += capacity_) {
        Node parent;
        parent.leaf = false;
        parent.first = static_cast<std::uint32_t>(start);
        parent.count = static_cast<std::uint32_t>(std::min(capacity_, level_end - start));
        for (std::uint32_t c = parent.first; c < parent.first + parent.count; ++c) parent.box.expand(nodes_[c].box);
        nodes_.push_back(parent);
      }
      level_begin = level_end;
      level_end = nodes_.size();
      ++height_;
    }
  }

  static Point center_of(const BoxType& b) {
    Point c;
    for (int d = 0; d < Dim; ++d) {
      // infinite extents (e.g. an unbounded gap) keep ordering finite
      const Scalar lo = std::isfinite(b.lo[d]) ? b.lo[d] : std::numeric_limits<Scalar>::max();
      const Scalar hi = std::isfinite(b.hi[d]) ? b.hi[d] : std::numeric_limits<Scalar>::max();
      c[d] = lo / 2 + hi / 2;
    }
    return c;
  }

  std::size_t capacity_ = 16;
  std::vector<Entry> entries_;
  std::vector<Node> nodes_;
  int height_ = 0;
};

}  // namespace acqlayout
