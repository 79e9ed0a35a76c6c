#include "calm/domain_tree.hpp"

#include <algorithm>
#include <string>

#include "calm/error.hpp"

namespace calm {

DomainTree::DomainTree(int lo, int hi, int k) : lo_(lo), hi_(hi), k_(k), depth_(0) {
  if (lo > hi) {
    throw InvalidArgument("domain tree range is empty: [" + std::to_string(lo) + "," +
                          std::to_string(hi) + "]");
  }
  if (k < 2) throw InvalidArgument("domain tree branching factor must be >= 2");
  long long reach = 1;
  const long long n = static_cast<long long>(hi) - lo + 1;
  while (reach < n) {
    reach *= k;
    ++depth_;
  }
}

int DomainTree::child_count(Interval node, int k) { return std::min(k, node.size()); }

Interval DomainTree::child(Interval node, int k, int index) {
  const int s = node.size();
  const int m = std::min(k, s);
  const int base = s / m;
  const int extra = s % m;
  // Leading `extra` children hold base + 1 values.
  const int start = index < extra ? index * (base + 1) : extra * (base + 1) + (index - extra) * base;
  const int len = index < extra ? base + 1 : base;
  return {node.lo + start, node.lo + start + len - 1};
}

std::vector<Interval> DomainTree::split(Interval node, int k) {
  const int m = child_count(node, k);
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out.push_back(child(node, k, i));
  return out;
}

int DomainTree::child_index_of(Interval node, int k, int v) {
  const int s = node.size();
  const int m = std::min(k, s);
  const int base = s / m;
  const int extra = s % m;
  const int offset = v - node.lo;
  const int big = extra * (base + 1);
  if (offset < big) return offset / (base + 1);
  return extra + (offset - big) / base;
}

Interval DomainTree::node(const NodePath& path) const {
  Interval cur = root();
  for (int idx : path) {
    if (cur.singleton()) throw InvalidArgument("node path descends below a leaf");
    if (idx < 0 || idx >= child_count(cur, k_)) {
      throw InvalidArgument("node path child index out of range: " + std::to_string(idx));
    }
    cur = child(cur, k_, idx);
  }
  return cur;
}

std::vector<Interval> DomainTree::children(const NodePath& path) const {
  const Interval n = node(path);
  if (n.singleton()) throw InvalidArgument("leaf node has no children");
  return split(n, k_);
}

NodePath DomainTree::path_to_value(int v) const {
  if (!root().contains(v)) {
    throw InvalidArgument("value " + std::to_string(v) + " outside domain [" +
                          std::to_string(lo_) + "," + std::to_string(hi_) + "]");
  }
  NodePath path;
  path.reserve(static_cast<std::size_t>(depth_));
  Interval cur = root();
  while (!cur.singleton()) {
    const int idx = child_index_of(cur, k_, v);
    path.push_back(idx);
    cur = child(cur, k_, idx);
  }
  return path;
}

}  // namespace calm
