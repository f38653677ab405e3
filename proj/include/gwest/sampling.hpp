// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <span>
#include <vector>

#include "gwest/numeric.hpp"
#include "gwest/tree.hpp"

namespace gwest {

// Union of observed root-paths of some full tree. Same storage as Tree, but
// leaves may sit above the height bound; every leaf is observed, because
// paths terminate at observed nodes.
struct SampleTree {
  Tree tree;
  double p = 1.0;  // per-node observation probability

  int height_bound() const { return tree.height(); }
  int observed_count() const { return tree.observed_count(); }

  // Throws std::invalid_argument on a broken sample; max_width of 0 skips
  // the child-count bound.
  void validate(int max_width = 0) const;
};

// Each node independently enters V' with probability p. Ids in increasing
// order; may be empty.
std::vector<int> sample_nodes(const Tree& g, double p, Rng& rng);
std::vector<int> sample_nodes(const Tree& g, double p, std::uint64_t seed);

// Minimal subtree of g containing the root and all of `observed`, child
// order preserved, observed flags set exactly on V'. Throws EmptySampleError
// when V' is empty.
SampleTree build_sample(const Tree& g, std::span<const int> observed, double p);

// Canonical decomposition of a sample: one shape id per isomorphism class of
// subtree, so mapping counts can be memoized by (shape, target node) and the
// preprocessing shared across many candidate trees.
class SampleShapeIndex {
 public:
  explicit SampleShapeIndex(const SampleTree& s);

  int shape_count() const { return static_cast<int>(shape_children_.size()); }
  int root_shape() const { return root_shape_; }
  const std::vector<int>& shape_children(int shape) const {
    return shape_children_[static_cast<std::size_t>(shape)];
  }
  bool shape_is_leaf(int shape) const {
    return shape_children_[static_cast<std::size_t>(shape)].empty();
  }
  int node_count() const { return node_count_; }
  int observed_count() const { return observed_count_; }
  int height_bound() const { return height_bound_; }
  double p() const { return p_; }
  // Shape of the subtree rooted at a sample node id.
  int shape_of(int node) const {
    return node_shape_[static_cast<std::size_t>(node)];
  }

 private:
  std::vector<std::vector<int>> shape_children_;
  std::vector<int> node_shape_;
  int root_shape_ = 0;
  int node_count_ = 0;
  int observed_count_ = 0;
  int height_bound_ = 0;
  double p_ = 1.0;
};

// Matrix c_ij of per-subtree mapping counts: entry (i, j) counts embeddings
// of the i-th root subtree of s into the j-th root subtree of g.
using MappingCountMatrix = std::vector<std::vector<BigInt>>;
MappingCountMatrix mapping_count_matrix(const SampleTree& s, const Tree& g);

// First-row expansion over minors of a rectangular count matrix: the sum
// over injections of rows into columns of the entry products. Zero when
// rows outnumber columns. Bitmask DP up to kPermanentDpMaxCols columns,
// minor recursion beyond.
inline constexpr int kPermanentDpMaxCols = 20;
BigInt rectangular_permanent(const MappingCountMatrix& m);

// C_{G,S}: the number of root- and ancestry-preserving embeddings of s into
// g in which sibling subtrees of s map to distinct sibling subtrees of g.
// Exact; 0 when s is not embeddable.
BigInt mapping_count(const SampleTree& s, const Tree& g);
BigInt mapping_count(const SampleShapeIndex& s, const Tree& g);

// log P(S|G) = log C_{G,S} + |V'| log p + (|V|-|V'|) log(1-p); -inf when S
// does not embed, or when p = 1 leaves unobserved nodes unexplained.
double log_prob_sample_given_tree(const SampleTree& s, const Tree& g);
double log_prob_sample_given_tree(const SampleShapeIndex& s, const Tree& g);

}  // namespace gwest
