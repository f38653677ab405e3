// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwest/rng.hpp"

namespace gwest {

// Offspring distribution over counts {1..W}. theta_0 is implicitly zero, so
// internal nodes always have at least one child and trees of bounded height
// are finite.
struct OffspringDistribution {
  std::vector<double> probs;  // probs[k-1] = P(offspring == k)

  int width() const { return static_cast<int>(probs.size()); }
  double prob(int k) const { return probs[static_cast<std::size_t>(k - 1)]; }
  double log_prob(int k) const;
  double mean() const;
  bool empty() const { return probs.empty(); }

  // Throws std::invalid_argument unless every entry is in [0,1] and the
  // entries sum to 1 within 1e-12.
  void validate() const;
};

OffspringDistribution uniform_offspring(int width);

// Rooted tree with ordered child lists and dense integer node ids.
//
// Child order is generation order and carries no meaning: isomorphism
// sensitive operations never depend on it. Removal tombstones nodes and
// recycles ids through a free list; compact() renumbers densely. Depths are
// assigned at creation and never move, because edits only attach or detach
// whole subtrees below fixed positions.
//
// A value is immutable once handed out by a generator and safe to share
// across threads.
class Tree {
 public:
  static constexpr int kNone = -1;

  explicit Tree(int height);

  int height() const { return height_; }
  int root() const { return root_; }

  bool alive(int v) const { return nodes_[v].alive; }
  int parent(int v) const { return nodes_[v].parent; }
  int depth(int v) const { return nodes_[v].depth; }
  const std::vector<int>& children(int v) const { return nodes_[v].children; }
  int child_count(int v) const {
    return static_cast<int>(nodes_[v].children.size());
  }
  bool is_leaf(int v) const { return nodes_[v].children.empty(); }

  bool observed(int v) const { return nodes_[v].observed; }
  void set_observed(int v, bool flag);

  int node_count() const { return alive_count_; }
  int leaf_count() const { return leaf_count_; }
  int internal_count() const { return alive_count_ - leaf_count_; }
  int observed_count() const { return observed_count_; }
  // Upper bound on ids currently in use (tombstones included).
  int id_bound() const { return static_cast<int>(nodes_.size()); }

  int add_child(int parent_id);

  // Unlinks child_id from parent_id without freeing its nodes, so the edit
  // can be reverted with reattach_child. The detached subtree no longer
  // counts toward node/leaf totals.
  void detach_child(int parent_id, int child_id);
  void reattach_child(int parent_id, int child_id);
  // Tombstones a previously detached subtree; appends freed ids if asked.
  void free_detached(int v, std::vector<int>* freed = nullptr);

  // Deep-copies `branch` as a new child of parent_id; the branch root lands
  // at depth(parent_id) + 1. Returns the new child id; reports all new ids
  // when asked.
  int attach_tree(int parent_id, const Tree& branch,
                  std::vector<int>* new_ids = nullptr);

  // Standalone copy of the subtree rooted at v, with v at depth 0 and
  // height reduced accordingly.
  Tree subtree_copy(int v) const;

  std::vector<int> preorder() const;
  std::vector<int> subtree_preorder(int v) const;
  int max_child_count() const;

  // Drops tombstones and renumbers ids in preorder; root becomes 0.
  void compact();

  // Full-tree invariants: one root at depth 0, mutually consistent links,
  // every leaf at depth exactly height(), internal nodes with 1..max_width
  // children. Throws std::invalid_argument on violation.
  void check_full(int max_width) const;

  bool same_topology(const Tree& other) const;

 private:
  struct Node {
    int parent = kNone;
    int depth = 0;
    std::vector<int> children;
    bool alive = true;
    bool observed = false;
  };

  int allocate(int parent, int depth);
  int copy_subtree_from(const Tree& src, int src_node, int parent_id,
                        std::vector<int>* new_ids);
  void add_counts(int v, int sign);

  std::vector<Node> nodes_;
  std::vector<int> free_list_;
  int root_ = 0;
  int height_ = 0;
  int alive_count_ = 0;
  int leaf_count_ = 0;
  int observed_count_ = 0;
};

// Canonical form of the unordered rooted tree below `node`: children render
// recursively and sort in non-increasing order, so two subtrees are
// isomorphic iff their canonical strings match.
std::string canonical_form(const Tree& t, int node);
std::string canonical_form(const Tree& t);

// Galton-Watson realization: every node above depth `height` draws its child
// count independently from theta; all leaves land at depth `height` exactly.
Tree gw_generate(const OffspringDistribution& theta, int height, Rng& rng);
Tree gw_generate(const OffspringDistribution& theta, int height,
                 std::uint64_t seed);

// Continues the process below an existing leaf until the tree's height.
void gw_extend(Tree& t, int node, const OffspringDistribution& theta,
               Rng& rng, std::vector<int>* new_ids = nullptr);

// Counts of internal nodes by offspring count: counts[j-1] = c_j.
struct OffspringCensus {
  std::vector<std::int64_t> counts;
  std::int64_t internal_nodes = 0;

  int width() const { return static_cast<int>(counts.size()); }
};

OffspringCensus offspring_census(const Tree& t, int width);

// log P(G | theta) = sum_j c_j log theta_j; -inf when some needed theta_j is
// zero. Rejects trees whose max child count exceeds theta's width.
double log_prob_tree(const Tree& t, const OffspringDistribution& theta);
double log_prob_census(const OffspringCensus& census,
                       const OffspringDistribution& theta);

}  // namespace gwest
