// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/sampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "gwest/errors.hpp"

namespace gwest {

void SampleTree::validate(int max_width) const {
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("sample: p must be in (0, 1]");
  if (tree.observed_count() < 1)
    throw std::invalid_argument("sample: no observed node");
  for (int v : tree.preorder()) {
    if (tree.depth(v) > tree.height())
      throw std::invalid_argument("sample: node below the height bound");
    if (tree.is_leaf(v) && !tree.observed(v))
      throw std::invalid_argument("sample: unobserved leaf");
    if (max_width > 0 && tree.child_count(v) > max_width)
      throw std::invalid_argument("sample: child count exceeds W");
  }
}

std::vector<int> sample_nodes(const Tree& g, double p, Rng& rng) {
  if (!(p > 0.0 && p <= 1.0))
    throw std::invalid_argument("sample_nodes: p must be in (0, 1]");
  std::vector<int> picked;
  for (int v : g.preorder())
    if (rng.bernoulli(p)) picked.push_back(v);
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::vector<int> sample_nodes(const Tree& g, double p, std::uint64_t seed) {
  Rng rng(seed);
  return sample_nodes(g, p, rng);
}

SampleTree build_sample(const Tree& g, std::span<const int> observed,
                        double p) {
  if (observed.empty()) throw EmptySampleError();
  std::vector<char> keep(static_cast<std::size_t>(g.id_bound()), 0);
  std::vector<char> is_observed(keep.size(), 0);
  for (int v : observed) {
    if (v < 0 || v >= g.id_bound() || !g.alive(v))
      throw std::invalid_argument("build_sample: observed id not in tree");
    is_observed[static_cast<std::size_t>(v)] = 1;
    for (int u = v; u != Tree::kNone; u = g.parent(u)) {
      if (keep[static_cast<std::size_t>(u)]) break;
      keep[static_cast<std::size_t>(u)] = 1;
    }
  }
  SampleTree s{Tree(g.height()), p};
  // Copy kept nodes in g's preorder so child order survives.
  std::vector<int> remap(keep.size(), Tree::kNone);
  remap[static_cast<std::size_t>(g.root())] = s.tree.root();
  for (int v : g.preorder()) {
    if (!keep[static_cast<std::size_t>(v)]) continue;
    if (v != g.root()) {
      const int parent = remap[static_cast<std::size_t>(g.parent(v))];
      remap[static_cast<std::size_t>(v)] = s.tree.add_child(parent);
    }
    s.tree.set_observed(remap[static_cast<std::size_t>(v)],
                        is_observed[static_cast<std::size_t>(v)] != 0);
  }
  return s;
}

SampleShapeIndex::SampleShapeIndex(const SampleTree& s) {
  node_count_ = s.tree.node_count();
  observed_count_ = s.tree.observed_count();
  height_bound_ = s.tree.height();
  p_ = s.p;

  // Bottom-up canonical strings; identical strings share a shape id.
  std::map<std::string, int> interned;
  std::vector<std::string> canon_by_shape;
  node_shape_.assign(static_cast<std::size_t>(s.tree.id_bound()), -1);
  std::vector<int> order = s.tree.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    std::vector<std::pair<std::string, int>> kids;
    kids.reserve(s.tree.children(v).size());
    for (int c : s.tree.children(v)) {
      const int cs = node_shape_[static_cast<std::size_t>(c)];
      kids.emplace_back(canon_by_shape[static_cast<std::size_t>(cs)], cs);
    }
    std::sort(kids.begin(), kids.end(), std::greater<>());
    std::string canon = "(";
    std::vector<int> child_shapes;
    child_shapes.reserve(kids.size());
    for (auto& [str, id] : kids) {
      canon += str;
      child_shapes.push_back(id);
    }
    canon += ")";
    auto found = interned.find(canon);
    int shape;
    if (found == interned.end()) {
      shape = static_cast<int>(shape_children_.size());
      interned.emplace(canon, shape);
      shape_children_.push_back(std::move(child_shapes));
      canon_by_shape.push_back(canon);
    } else {
      shape = found->second;
    }
    node_shape_[static_cast<std::size_t>(v)] = shape;
  }
  root_shape_ = node_shape_[static_cast<std::size_t>(s.tree.root())];
}

BigInt rectangular_permanent(const MappingCountMatrix& a) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return 1;
  const int m = static_cast<int>(a[0].size());
  if (n > m) return 0;
  for (const auto& row : a) {
    bool all_zero = true;
    for (const auto& x : row)
      if (x != 0) {
        all_zero = false;
        break;
      }
    if (all_zero) return 0;
  }
  if (m <= kPermanentDpMaxCols) {
    // dp[mask] = permanent of the first popcount(mask) rows on columns mask.
    std::vector<BigInt> dp(std::size_t{1} << m);
    dp[0] = 1;
    BigInt total = 0;
    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << m); ++mask) {
      const int r = std::popcount(mask) - 1;
      if (r >= n) continue;
      BigInt acc = 0;
      for (int j = 0; j < m; ++j) {
        if (!(mask >> j & 1u)) continue;
        const BigInt& c = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
        if (c != 0) acc += c * dp[mask ^ (std::uint32_t{1} << j)];
      }
      dp[mask] = std::move(acc);
      if (r + 1 == n) total += dp[mask];
    }
    return total;
  }
  // First-row expansion over minors.
  std::vector<int> cols(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) cols[static_cast<std::size_t>(j)] = j;
  const auto expand = [&](auto&& self, int row, std::vector<int>& avail) -> BigInt {
    if (row == n) return 1;
    BigInt acc = 0;
    for (std::size_t i = 0; i < avail.size(); ++i) {
      const int j = avail[i];
      const BigInt& c = a[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
      if (c == 0) continue;
      std::vector<int> rest;
      rest.reserve(avail.size() - 1);
      for (std::size_t k = 0; k < avail.size(); ++k)
        if (k != i) rest.push_back(avail[k]);
      acc += c * self(self, row + 1, rest);
    }
    return acc;
  };
  return expand(expand, 0, cols);
}

namespace {

// Per-evaluation memo keyed by (shape, target node).
class MappingMemo {
 public:
  MappingMemo(const SampleShapeIndex& s, const Tree& g) : s_(s), g_(g) {}

  BigInt count(int shape, int gnode) {
    if (s_.shape_is_leaf(shape)) return 1;
    const std::uint64_t key =
        (static_cast<std::uint64_t>(shape) << 32) |
        static_cast<std::uint32_t>(gnode);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const auto& sc = s_.shape_children(shape);
    const auto& gc = g_.children(gnode);
    BigInt value = 0;
    if (sc.size() <= gc.size()) {
      MappingCountMatrix matrix(sc.size(), std::vector<BigInt>(gc.size()));
      for (std::size_t i = 0; i < sc.size(); ++i)
        for (std::size_t j = 0; j < gc.size(); ++j)
          matrix[i][j] = count(sc[i], gc[j]);
      value = rectangular_permanent(matrix);
    }
    memo_.emplace(key, value);
    return value;
  }

 private:
  const SampleShapeIndex& s_;
  const Tree& g_;
  std::unordered_map<std::uint64_t, BigInt> memo_;
};

}  // namespace

MappingCountMatrix mapping_count_matrix(const SampleTree& s, const Tree& g) {
  SampleShapeIndex idx(s);
  MappingMemo memo(idx, g);
  const auto& sroots = s.tree.children(s.tree.root());
  const auto& groots = g.children(g.root());
  MappingCountMatrix matrix(sroots.size(), std::vector<BigInt>(groots.size()));
  for (std::size_t i = 0; i < sroots.size(); ++i)
    for (std::size_t j = 0; j < groots.size(); ++j)
      matrix[i][j] = memo.count(idx.shape_of(sroots[i]), groots[j]);
  return matrix;
}

BigInt mapping_count(const SampleShapeIndex& s, const Tree& g) {
  MappingMemo memo(s, g);
  return memo.count(s.root_shape(), g.root());
}

BigInt mapping_count(const SampleTree& s, const Tree& g) {
  SampleShapeIndex idx(s);
  return mapping_count(idx, g);
}

double log_prob_sample_given_tree(const SampleShapeIndex& s, const Tree& g) {
  const int observed = s.observed_count();
  const int total = g.node_count();
  if (s.node_count() > total) return kNegInf;
  const int unobserved = total - observed;
  if (s.p() >= 1.0 && unobserved > 0) return kNegInf;
  const BigInt c = mapping_count(s, g);
  if (c == 0) return kNegInf;
  double lp = log_big(c);
  if (observed > 0) lp += observed * std::log(s.p());
  if (unobserved > 0) lp += unobserved * std::log1p(-s.p());
  return lp;
}

double log_prob_sample_given_tree(const SampleTree& s, const Tree& g) {
  SampleShapeIndex idx(s);
  return log_prob_sample_given_tree(idx, g);
}

}  // namespace gwest
