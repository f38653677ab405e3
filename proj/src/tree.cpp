// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "gwest/numeric.hpp"

namespace gwest {

double OffspringDistribution::log_prob(int k) const {
  if (k < 1 || k > width()) return kNegInf;
  const double p = probs[static_cast<std::size_t>(k - 1)];
  return p > 0.0 ? std::log(p) : kNegInf;
}

double OffspringDistribution::mean() const {
  double m = 0.0;
  for (int k = 1; k <= width(); ++k) m += k * prob(k);
  return m;
}

void OffspringDistribution::validate() const {
  if (probs.empty())
    throw std::invalid_argument("offspring distribution: empty support");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument(
          "offspring distribution: probability outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument(
        "offspring distribution: probabilities sum to " + std::to_string(sum));
}

OffspringDistribution uniform_offspring(int width) {
  if (width < 1) throw std::invalid_argument("uniform_offspring: width < 1");
  return {std::vector<double>(static_cast<std::size_t>(width), 1.0 / width)};
}

Tree::Tree(int height) : height_(height) {
  if (height < 0) throw std::invalid_argument("tree height must be >= 0");
  nodes_.push_back(Node{});
  root_ = 0;
  alive_count_ = 1;
  leaf_count_ = 1;
}

void Tree::set_observed(int v, bool flag) {
  if (nodes_[v].observed != flag) {
    nodes_[v].observed = flag;
    observed_count_ += flag ? 1 : -1;
  }
}

int Tree::allocate(int parent, int depth) {
  int id;
  if (!free_list_.empty()) {
    id = free_list_.back();
    free_list_.pop_back();
    nodes_[id] = Node{};
  } else {
    id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
  }
  nodes_[id].parent = parent;
  nodes_[id].depth = depth;
  return id;
}

int Tree::add_child(int parent_id) {
  Node& p = nodes_[parent_id];
  if (!p.alive) throw std::invalid_argument("add_child: dead parent");
  const bool parent_was_leaf = p.children.empty();
  const int id = allocate(parent_id, p.depth + 1);
  nodes_[parent_id].children.push_back(id);
  alive_count_ += 1;
  leaf_count_ += parent_was_leaf ? 0 : 1;
  return id;
}

void Tree::add_counts(int v, int sign) {
  for (int u : subtree_preorder(v)) {
    alive_count_ += sign;
    if (nodes_[u].children.empty()) leaf_count_ += sign;
    if (nodes_[u].observed) observed_count_ += sign;
  }
}

void Tree::detach_child(int parent_id, int child_id) {
  auto& kids = nodes_[parent_id].children;
  auto it = std::find(kids.begin(), kids.end(), child_id);
  if (it == kids.end()) throw std::invalid_argument("detach_child: not a child");
  kids.erase(it);
  add_counts(child_id, -1);
  if (kids.empty()) leaf_count_ += 1;
}

void Tree::reattach_child(int parent_id, int child_id) {
  auto& kids = nodes_[parent_id].children;
  if (kids.empty()) leaf_count_ -= 1;
  kids.push_back(child_id);
  add_counts(child_id, +1);
}

void Tree::free_detached(int v, std::vector<int>* freed) {
  for (int u : subtree_preorder(v)) {
    nodes_[u].alive = false;
    nodes_[u].children.clear();
    free_list_.push_back(u);
    if (freed) freed->push_back(u);
  }
}

int Tree::copy_subtree_from(const Tree& src, int src_node, int parent_id,
                            std::vector<int>* new_ids) {
  const bool parent_was_leaf = nodes_[parent_id].children.empty();
  const int id = allocate(parent_id, nodes_[parent_id].depth + 1);
  nodes_[parent_id].children.push_back(id);
  nodes_[id].observed = src.observed(src_node);
  alive_count_ += 1;
  leaf_count_ += parent_was_leaf ? 0 : 1;
  if (src.observed(src_node)) observed_count_ += 1;
  if (new_ids) new_ids->push_back(id);
  for (int c : src.children(src_node)) {
    copy_subtree_from(src, c, id, new_ids);
  }
  return id;
}

int Tree::attach_tree(int parent_id, const Tree& branch,
                      std::vector<int>* new_ids) {
  return copy_subtree_from(branch, branch.root(), parent_id, new_ids);
}

Tree Tree::subtree_copy(int v) const {
  Tree out(height_ - depth(v));
  out.nodes_[out.root_].observed = observed(v);
  out.observed_count_ = observed(v) ? 1 : 0;
  for (int c : children(v)) {
    out.copy_subtree_from(*this, c, out.root_, nullptr);
  }
  return out;
}

std::vector<int> Tree::preorder() const { return subtree_preorder(root_); }

std::vector<int> Tree::subtree_preorder(int v) const {
  std::vector<int> order;
  std::vector<int> stack{v};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    order.push_back(u);
    const auto& kids = nodes_[u].children;
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  return order;
}

int Tree::max_child_count() const {
  int m = 0;
  for (int v : preorder()) m = std::max(m, child_count(v));
  return m;
}

void Tree::compact() {
  std::vector<int> order = preorder();
  std::vector<int> remap(nodes_.size(), kNone);
  for (std::size_t i = 0; i < order.size(); ++i)
    remap[order[i]] = static_cast<int>(i);
  std::vector<Node> fresh(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Node& n = nodes_[order[i]];
    Node& m = fresh[i];
    m.depth = n.depth;
    m.observed = n.observed;
    m.alive = true;
    m.parent = n.parent == kNone ? kNone : remap[n.parent];
    m.children.reserve(n.children.size());
    for (int c : n.children) m.children.push_back(remap[c]);
  }
  nodes_ = std::move(fresh);
  free_list_.clear();
  root_ = 0;
}

void Tree::check_full(int max_width) const {
  const std::vector<int> order = preorder();
  if (static_cast<int>(order.size()) != alive_count_)
    throw std::invalid_argument("tree: unreachable or miscounted nodes");
  if (nodes_[root_].parent != kNone || nodes_[root_].depth != 0)
    throw std::invalid_argument("tree: bad root");
  for (int v : order) {
    const Node& n = nodes_[v];
    if (!n.alive) throw std::invalid_argument("tree: dead node reachable");
    for (int c : n.children) {
      if (nodes_[c].parent != v)
        throw std::invalid_argument("tree: parent/child links disagree");
      if (nodes_[c].depth != n.depth + 1)
        throw std::invalid_argument("tree: bad depth");
    }
    const int d = static_cast<int>(n.children.size());
    if (n.depth == height_) {
      if (d != 0) throw std::invalid_argument("tree: node below max depth");
    } else {
      if (d < 1 || d > max_width)
        throw std::invalid_argument(
            "tree: internal node with child count outside [1, W]");
    }
  }
}

bool Tree::same_topology(const Tree& other) const {
  // Structural equality respecting child order, ignoring ids.
  struct Frame {
    int a, b;
  };
  if (height_ != other.height_) return false;
  std::vector<Frame> stack{{root_, other.root_}};
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    if (child_count(a) != other.child_count(b)) return false;
    if (observed(a) != other.observed(b)) return false;
    for (int i = 0; i < child_count(a); ++i)
      stack.push_back({children(a)[i], other.children(b)[i]});
  }
  return true;
}

std::string canonical_form(const Tree& t, int node) {
  std::vector<std::string> parts;
  parts.reserve(t.children(node).size());
  for (int c : t.children(node)) parts.push_back(canonical_form(t, c));
  std::sort(parts.begin(), parts.end(), std::greater<>());
  std::string out = "(";
  for (const auto& p : parts) out += p;
  out += ")";
  return out;
}

std::string canonical_form(const Tree& t) { return canonical_form(t, t.root()); }

Tree gw_generate(const OffspringDistribution& theta, int height, Rng& rng) {
  theta.validate();
  if (height < 0) throw std::invalid_argument("gw_generate: height < 0");
  Tree t(height);
  std::deque<int> frontier{t.root()};
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop_front();
    if (t.depth(v) == height) continue;
    const int k = rng.categorical(theta.probs) + 1;
    for (int i = 0; i < k; ++i) frontier.push_back(t.add_child(v));
  }
  return t;
}

Tree gw_generate(const OffspringDistribution& theta, int height,
                 std::uint64_t seed) {
  Rng rng(seed);
  return gw_generate(theta, height, rng);
}

void gw_extend(Tree& t, int node, const OffspringDistribution& theta, Rng& rng,
               std::vector<int>* new_ids) {
  std::deque<int> frontier{node};
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop_front();
    if (t.depth(v) == t.height() || !t.is_leaf(v)) continue;
    const int k = rng.categorical(theta.probs) + 1;
    for (int i = 0; i < k; ++i) {
      const int c = t.add_child(v);
      if (new_ids) new_ids->push_back(c);
      frontier.push_back(c);
    }
  }
}

OffspringCensus offspring_census(const Tree& t, int width) {
  OffspringCensus census;
  census.counts.assign(static_cast<std::size_t>(width), 0);
  for (int v : t.preorder()) {
    const int d = t.child_count(v);
    if (d == 0) continue;
    if (d > width)
      throw std::invalid_argument("offspring_census: child count exceeds W");
    census.counts[static_cast<std::size_t>(d - 1)] += 1;
    census.internal_nodes += 1;
  }
  return census;
}

double log_prob_census(const OffspringCensus& census,
                       const OffspringDistribution& theta) {
  if (census.width() > theta.width())
    throw std::invalid_argument("log_prob_census: census wider than theta");
  double acc = 0.0;
  for (int j = 1; j <= census.width(); ++j) {
    const std::int64_t c = census.counts[static_cast<std::size_t>(j - 1)];
    if (c == 0) continue;
    const double lp = theta.log_prob(j);
    if (lp == kNegInf) return kNegInf;
    acc += static_cast<double>(c) * lp;
  }
  return acc;
}

double log_prob_tree(const Tree& t, const OffspringDistribution& theta) {
  const int m = t.max_child_count();
  if (m > theta.width())
    throw std::invalid_argument(
        "log_prob_tree: tree has child counts beyond theta's support");
  return log_prob_census(offspring_census(t, theta.width()), theta);
}

}  // namespace gwest
