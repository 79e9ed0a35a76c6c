#pragma once

#include <cstddef>
#include <vector>

namespace calm {

// Inclusive integer range.
struct Interval {
  int lo = 0;
  int hi = 0;

  int size() const { return hi - lo + 1; }
  bool singleton() const { return lo == hi; }
  bool contains(int v) const { return lo <= v && v <= hi; }
  bool operator==(const Interval&) const = default;
};

// Child indices from the root; each entry is in [0, k).
using NodePath = std::vector<int>;

// Balanced k-ary partition of [lo, hi]. Nodes are never materialised: every
// query is answered from (lo, hi, k) arithmetic, so wide pixel domains cost
// O(depth). A node of size s splits into min(k, s) contiguous children; when
// s is not divisible the leading children are one element larger.
class DomainTree {
 public:
  DomainTree(int lo, int hi, int k);

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  int k() const { return k_; }
  Interval root() const { return {lo_, hi_}; }
  std::size_t leaf_count() const { return static_cast<std::size_t>(hi_ - lo_) + 1; }

  // ceil(log_k(hi - lo + 1)); 0 for a singleton range.
  int depth() const { return depth_; }

  // Interval addressed by `path`. Throws InvalidArgument for a path that
  // descends below a leaf or uses an out-of-range child index.
  Interval node(const NodePath& path) const;

  // Children of the internal node at `path`. Throws on a leaf.
  std::vector<Interval> children(const NodePath& path) const;

  NodePath path_to_value(int v) const;

  // Partition arithmetic shared by every traversal.
  static int child_count(Interval node, int k);
  static Interval child(Interval node, int k, int index);
  static std::vector<Interval> split(Interval node, int k);
  static int child_index_of(Interval node, int k, int v);

 private:
  int lo_;
  int hi_;
  int k_;
  int depth_;
};

}  // namespace calm
