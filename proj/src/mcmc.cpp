// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gwest/errors.hpp"

namespace gwest {

namespace {

constexpr double kLogHalf = -0.6931471805599453;

// The four transition-kernel densities, all in log space. The reverse
// densities omit the 1/d child-pick factor by default: on isomorphism
// classes the child-pick probability n_T/(d+1) and the branch-generation
// multiplicity m_T combine with the class-size ratio m_{X'}/m_X =
// (d+1) m_T / n_T so that everything cancels, and the remaining ratio is
// exactly what targets g on the generated-tree space. The per-branch
// variant keeps the 1/d factors for comparison; it skews the stationary
// distribution toward small trees.
double log_q_add_forward(int degree, double branch_log_prob,
                         int internal_before) {
  return (degree > 1 ? kLogHalf : 0.0) + branch_log_prob -
         std::log(static_cast<double>(internal_before));
}

double log_q_add_reverse(int degree, int width, int internal_after,
                         bool per_branch) {
  double v = (degree + 1 < width ? kLogHalf : 0.0) -
             std::log(static_cast<double>(internal_after));
  if (per_branch) v -= std::log(static_cast<double>(degree + 1));
  return v;
}

double log_q_remove_forward(int degree, int width, int internal_before,
                            bool per_branch) {
  double v = (degree < width ? kLogHalf : 0.0) -
             std::log(static_cast<double>(internal_before));
  if (per_branch) v -= std::log(static_cast<double>(degree));
  return v;
}

double log_q_remove_reverse(int degree, double branch_log_prob,
                            int internal_after) {
  return (degree - 1 > 1 ? kLogHalf : 0.0) + branch_log_prob -
         std::log(static_cast<double>(internal_after));
}

// Sample extended to a full tree: every sample leaf above depth L continues
// as GW(theta0) down to depth L.
Tree extend_sample_tree(const SampleTree& s,
                        const OffspringDistribution& theta0, Rng& rng) {
  Tree x = s.tree;
  for (int v : x.preorder()) {
    if (x.is_leaf(v) && x.depth(v) < x.height()) gw_extend(x, v, theta0, rng);
  }
  return x;
}

std::vector<int> sorted_internal_ids(const Tree& t) {
  std::vector<int> ids;
  for (int v : t.preorder())
    if (!t.is_leaf(v)) ids.push_back(v);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// Standalone GW branch of the given height (0 = a single leaf node).
Tree generate_branch(const OffspringDistribution& theta0, int height,
                     Rng& rng) {
  Tree b(height);
  gw_extend(b, b.root(), theta0, rng);
  return b;
}

// Mapping-count cache over the chain's tree, keyed (node, shape). Edits
// invalidate only the root path and the touched branch; everything else
// keeps its exact counts. Invalidation is transactional so a rejected
// proposal restores the previous values.
class IncrementalMapping {
 public:
  IncrementalMapping(const SampleShapeIndex& shapes, const Tree& x)
      : shapes_(&shapes), x_(&x) {}

  BigInt root_count() { return compute(shapes_->root_shape(), x_->root()); }

  void invalidate_path_to_root(int v) {
    for (int u = v; u != Tree::kNone; u = x_->parent(u)) {
      if (u < static_cast<int>(rows_.size()) && !rows_[static_cast<std::size_t>(u)].val.empty()) {
        Row& row = rows_[static_cast<std::size_t>(u)];
        undo_.emplace_back(u, row);
        std::fill(row.valid.begin(), row.valid.end(), char{0});
      }
    }
  }

  // Reused or fresh node id: drop whatever a previous owner cached.
  void reset_node(int id) {
    if (id < static_cast<int>(rows_.size()) &&
        !rows_[static_cast<std::size_t>(id)].val.empty()) {
      Row& row = rows_[static_cast<std::size_t>(id)];
      std::fill(row.valid.begin(), row.valid.end(), char{0});
    }
  }

  void commit() { undo_.clear(); }

  void rollback() {
    for (auto it = undo_.rbegin(); it != undo_.rend(); ++it)
      rows_[static_cast<std::size_t>(it->first)] = std::move(it->second);
    undo_.clear();
  }

 private:
  struct Row {
    std::vector<BigInt> val;
    std::vector<char> valid;
  };

  Row& row_for(int node) {
    if (node >= static_cast<int>(rows_.size()))
      rows_.resize(static_cast<std::size_t>(node) + 1);
    Row& r = rows_[static_cast<std::size_t>(node)];
    if (r.val.empty()) {
      r.val.resize(static_cast<std::size_t>(shapes_->shape_count()));
      r.valid.assign(static_cast<std::size_t>(shapes_->shape_count()), 0);
    }
    return r;
  }

  BigInt compute(int shape, int node) {
    if (shapes_->shape_is_leaf(shape)) return 1;
    {
      Row& row = row_for(node);
      if (row.valid[static_cast<std::size_t>(shape)])
        return row.val[static_cast<std::size_t>(shape)];
    }
    const auto& sc = shapes_->shape_children(shape);
    const auto& gc = x_->children(node);
    BigInt value = 0;
    if (sc.size() <= gc.size()) {
      MappingCountMatrix matrix(sc.size(), std::vector<BigInt>(gc.size()));
      for (std::size_t i = 0; i < sc.size(); ++i)
        for (std::size_t j = 0; j < gc.size(); ++j)
          matrix[i][j] = compute(sc[i], gc[j]);
      value = rectangular_permanent(matrix);
    }
    Row& row = row_for(node);  // recursion may have resized rows_
    row.val[static_cast<std::size_t>(shape)] = value;
    row.valid[static_cast<std::size_t>(shape)] = 1;
    return row.val[static_cast<std::size_t>(shape)];
  }

  const SampleShapeIndex* shapes_;
  const Tree* x_;
  std::vector<Row> rows_;
  std::vector<std::pair<int, Row>> undo_;
};

double log_p_sample_from_count(const BigInt& count, double p, int observed,
                               int total_nodes) {
  if (count == 0) return kNegInf;
  double lp = log_big(count);
  if (observed > 0) lp += observed * std::log(p);
  const int unobserved = total_nodes - observed;
  if (unobserved > 0) lp += unobserved * std::log1p(-p);
  return lp;
}

void check_mcmc_inputs(const SampleTree& s,
                       const OffspringDistribution& theta0) {
  theta0.validate();
  if (theta0.width() < 2)
    throw std::invalid_argument(
        "mcmc: W = 1 admits no add/remove move; the problem is degenerate");
  s.validate(theta0.width());
}

// In-place chain; the spec-surface wrappers below mirror its draws exactly.
class Chain {
 public:
  Chain(const SampleTree& s, const OffspringDistribution& theta0,
        bool per_branch, std::uint64_t seed)
      : theta0_(theta0),
        width_(theta0.width()),
        per_branch_(per_branch),
        rng_(seed),
        shapes_(s),
        x_(extend_sample_tree(s, theta0, rng_)),
        mapping_(shapes_, x_) {
    internal_ = sorted_internal_ids(x_);
    log_p0_ = log_prob_tree(x_, theta0_);
    log_ps_ = log_p_sample_from_count(mapping_.root_count(), shapes_.p(),
                                      shapes_.observed_count(),
                                      x_.node_count());
    if (log_ps_ == kNegInf || log_p0_ == kNegInf)
      throw std::logic_error("chain initialized outside the support of g");
  }

  void step() {
    ++proposed_;
    const int v = internal_[rng_.uniform_int(internal_.size())];
    const int d = x_.child_count(v);
    ProposalAction action;
    if (d == 1) {
      action = ProposalAction::kAdd;
    } else if (d == width_) {
      action = ProposalAction::kRemove;
    } else {
      action = rng_.uniform() < 0.5 ? ProposalAction::kAdd
                                    : ProposalAction::kRemove;
    }
    if (action == ProposalAction::kAdd) {
      step_add(v, d);
    } else {
      step_remove(v, d);
    }
  }

  const Tree& tree() const { return x_; }
  double log_p_sample() const { return log_ps_; }
  double log_p_prior() const { return log_p0_; }
  std::int64_t accepted() const { return accepted_; }
  std::int64_t proposed() const { return proposed_; }

  void verify_caches() {
    const double fresh_p0 = log_prob_tree(x_, theta0_);
    const double fresh_ps = log_prob_sample_given_tree(shapes_, x_);
    if (std::abs(fresh_p0 - log_p0_) > 1e-8 ||
        std::abs(fresh_ps - log_ps_) > 1e-8)
      throw std::logic_error("chain caches diverged from recomputation");
  }

 private:
  void insert_internal(int id) {
    internal_.insert(std::lower_bound(internal_.begin(), internal_.end(), id),
                     id);
  }
  void erase_internal(int id) {
    internal_.erase(std::lower_bound(internal_.begin(), internal_.end(), id));
  }

  void step_add(int v, int d) {
    const int branch_height = x_.height() - x_.depth(v) - 1;
    const Tree branch = generate_branch(theta0_, branch_height, rng_);
    const double branch_lp = log_prob_tree(branch, theta0_);
    const int internal_before = x_.internal_count();

    std::vector<int> new_ids;
    const int child = x_.attach_tree(v, branch, &new_ids);
    for (int id : new_ids) {
      mapping_.reset_node(id);
      if (!x_.is_leaf(id)) insert_internal(id);
    }
    const int internal_after = x_.internal_count();
    mapping_.invalidate_path_to_root(v);

    const double cand_ps = log_p_sample_from_count(
        mapping_.root_count(), shapes_.p(), shapes_.observed_count(),
        x_.node_count());
    const double cand_p0 = log_p0_ + branch_lp + theta0_.log_prob(d + 1) -
                           theta0_.log_prob(d);
    const double lq_fwd = log_q_add_forward(d, branch_lp, internal_before);
    const double lq_rev =
        log_q_add_reverse(d, width_, internal_after, per_branch_);
    const double log_r =
        (cand_ps + cand_p0 + lq_rev) - (log_ps_ + log_p0_ + lq_fwd);
    if (std::log(rng_.uniform()) < std::min(0.0, log_r)) {
      ++accepted_;
      log_ps_ = cand_ps;
      log_p0_ = cand_p0;
      mapping_.commit();
    } else {
      for (int id : new_ids)
        if (!x_.is_leaf(id)) erase_internal(id);
      x_.detach_child(v, child);
      x_.free_detached(child);
      mapping_.rollback();
    }
  }

  void step_remove(int v, int d) {
    const int pick = static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(d)));
    const int child = x_.children(v)[static_cast<std::size_t>(pick)];
    const std::vector<int> removed = x_.subtree_preorder(child);
    double branch_lp = 0.0;
    for (int u : removed)
      if (!x_.is_leaf(u)) branch_lp += theta0_.log_prob(x_.child_count(u));

    const int internal_before = x_.internal_count();
    x_.detach_child(v, child);
    for (int u : removed)
      if (!x_.is_leaf(u)) erase_internal(u);
    const int internal_after = x_.internal_count();
    mapping_.invalidate_path_to_root(v);

    const double cand_ps = log_p_sample_from_count(
        mapping_.root_count(), shapes_.p(), shapes_.observed_count(),
        x_.node_count());
    const double cand_p0 = log_p0_ - branch_lp + theta0_.log_prob(d - 1) -
                           theta0_.log_prob(d);
    const double lq_fwd =
        log_q_remove_forward(d, width_, internal_before, per_branch_);
    const double lq_rev = log_q_remove_reverse(d, branch_lp, internal_after);
    const double log_r =
        (cand_ps + cand_p0 + lq_rev) - (log_ps_ + log_p0_ + lq_fwd);
    if (std::log(rng_.uniform()) < std::min(0.0, log_r)) {
      ++accepted_;
      log_ps_ = cand_ps;
      log_p0_ = cand_p0;
      x_.free_detached(child);
      mapping_.commit();
    } else {
      x_.reattach_child(v, child);
      for (int u : removed)
        if (!x_.is_leaf(u)) insert_internal(u);
      mapping_.rollback();
    }
  }

  OffspringDistribution theta0_;
  int width_;
  bool per_branch_;
  Rng rng_;
  SampleShapeIndex shapes_;
  Tree x_;
  IncrementalMapping mapping_;
  std::vector<int> internal_;
  double log_ps_ = 0.0;
  double log_p0_ = 0.0;
  std::int64_t accepted_ = 0;
  std::int64_t proposed_ = 0;
};

}  // namespace

ChainState init_chain(const SampleTree& s, const OffspringDistribution& theta0,
                      Rng& rng) {
  check_mcmc_inputs(s, theta0);
  ChainState state{extend_sample_tree(s, theta0, rng), 0.0, 0.0, 0};
  state.log_p_prior = log_prob_tree(state.tree, theta0);
  state.log_p_sample = log_prob_sample_given_tree(s, state.tree);
  return state;
}

ProposalOutcome propose(const ChainState& state,
                        const OffspringDistribution& theta0, Rng& rng,
                        bool per_branch_weights) {
  const int width = theta0.width();
  if (width < 2)
    throw std::invalid_argument("propose: W = 1 admits no valid move");
  const Tree& x = state.tree;
  const std::vector<int> internal = sorted_internal_ids(x);
  const int v = internal[rng.uniform_int(internal.size())];
  const int d = x.child_count(v);

  ProposalAction action;
  if (d == 1) {
    action = ProposalAction::kAdd;
  } else if (d == width) {
    action = ProposalAction::kRemove;
  } else {
    action =
        rng.uniform() < 0.5 ? ProposalAction::kAdd : ProposalAction::kRemove;
  }

  ProposalOutcome out;
  out.action = action;
  out.target_node = v;
  out.target_degree = d;
  out.candidate = x;
  const int internal_before = x.internal_count();

  if (action == ProposalAction::kAdd) {
    const Tree branch =
        generate_branch(theta0, x.height() - x.depth(v) - 1, rng);
    out.branch_log_prob = log_prob_tree(branch, theta0);
    out.candidate.attach_tree(v, branch);
    const int internal_after = out.candidate.internal_count();
    out.log_q_forward =
        log_q_add_forward(d, out.branch_log_prob, internal_before);
    out.log_q_reverse =
        log_q_add_reverse(d, width, internal_after, per_branch_weights);
    out.candidate_log_p_prior = state.log_p_prior + out.branch_log_prob +
                                theta0.log_prob(d + 1) - theta0.log_prob(d);
  } else {
    const int pick = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d)));
    const int child = x.children(v)[static_cast<std::size_t>(pick)];
    double branch_lp = 0.0;
    for (int u : x.subtree_preorder(child))
      if (!x.is_leaf(u)) branch_lp += theta0.log_prob(x.child_count(u));
    out.branch_log_prob = branch_lp;
    out.candidate.detach_child(v, child);
    out.candidate.free_detached(child);
    const int internal_after = out.candidate.internal_count();
    out.log_q_forward =
        log_q_remove_forward(d, width, internal_before, per_branch_weights);
    out.log_q_reverse = log_q_remove_reverse(d, branch_lp, internal_after);
    out.candidate_log_p_prior = state.log_p_prior - branch_lp +
                                theta0.log_prob(d - 1) - theta0.log_prob(d);
  }
  return out;
}

double acceptance_log_ratio(const ChainState& state,
                            const ProposalOutcome& proposal,
                            const SampleTree& s) {
  const double cand_ps = log_prob_sample_given_tree(s, proposal.candidate);
  if (cand_ps == kNegInf) return kNegInf;
  const double log_r =
      (cand_ps + proposal.candidate_log_p_prior + proposal.log_q_reverse) -
      (state.log_p_sample + state.log_p_prior + proposal.log_q_forward);
  return std::min(0.0, log_r);
}

ChainResult run_chain(const SampleTree& s, const McmcConfig& cfg,
                      std::int64_t burn_in, std::int64_t total,
                      std::int64_t thin) {
  if (burn_in < 0 || total < 0 || thin < 1)
    throw std::invalid_argument("run_chain: bad schedule");
  const OffspringDistribution& theta0 = cfg.theta0;
  check_mcmc_inputs(s, theta0);

  Chain chain(s, theta0, cfg.per_branch_weights, cfg.seed);
  ChainResult result;
  result.samples.reserve(static_cast<std::size_t>(total / thin));
  std::int64_t steps = 0;
  for (std::int64_t i = 0; i < burn_in; ++i) {
    chain.step();
    ++steps;
    if (cfg.check_cache_every > 0 && steps % cfg.check_cache_every == 0)
      chain.verify_caches();
  }
  for (std::int64_t i = 1; i <= total; ++i) {
    chain.step();
    ++steps;
    if (cfg.check_cache_every > 0 && steps % cfg.check_cache_every == 0)
      chain.verify_caches();
    if (i % thin == 0) {
      McmcSample sample;
      sample.census = offspring_census(chain.tree(), theta0.width());
      sample.log_p_prior = log_prob_census(sample.census, theta0);
      result.log_g_trace.push_back(chain.log_p_sample() + sample.log_p_prior);
      result.samples.push_back(std::move(sample));
    }
  }
  result.steps = steps;
  result.acceptance_rate =
      chain.proposed() > 0 ? static_cast<double>(chain.accepted()) /
                                 static_cast<double>(chain.proposed())
                           : 0.0;
  return result;
}

double importance_objective(const OffspringDistribution& theta,
                            std::span<const McmcSample> samples,
                            const OffspringDistribution& theta0) {
  if (samples.empty())
    throw std::invalid_argument("importance_objective: no samples");
  std::vector<double> terms;
  terms.reserve(samples.size());
  for (const auto& s : samples) {
    const double lp0 = log_prob_census(s.census, theta0);
    const double lp = log_prob_census(s.census, theta);
    terms.push_back(lp == kNegInf ? kNegInf : lp - lp0);
  }
  return log_sum_exp(terms);
}

TermTable importance_term_table(std::span<const McmcSample> samples,
                                int height, int width, double p) {
  std::vector<std::pair<std::vector<std::int64_t>, double>> terms;
  terms.reserve(samples.size());
  for (const auto& s : samples)
    terms.emplace_back(s.census.counts, -s.log_p_prior);
  return term_table_from_terms(terms, height, width, p);
}

OffspringDistribution shifted_binomial(double mean, int width) {
  if (width < 1) throw std::invalid_argument("shifted_binomial: width < 1");
  if (width == 1) return OffspringDistribution{{1.0}};
  const double q =
      std::clamp((mean - 1.0) / static_cast<double>(width - 1), 0.0, 1.0);
  OffspringDistribution theta;
  theta.probs.resize(static_cast<std::size_t>(width));
  const int n = width - 1;
  double coeff = 1.0;  // running C(n, i)
  for (int i = 0; i <= n; ++i) {
    theta.probs[static_cast<std::size_t>(i)] =
        coeff * std::pow(q, i) * std::pow(1.0 - q, n - i);
    coeff = coeff * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  double sum = 0.0;
  for (double v : theta.probs) sum += v;
  for (double& v : theta.probs) v /= sum;
  return theta;
}

OffspringDistribution theta0_from_sample(const SampleTree& s, int width,
                                         int k_levels, bool* used_fallback) {
  if (k_levels < 1) throw std::invalid_argument("theta0_from_sample: k < 1");
  std::int64_t nodes = 0, edges = 0;
  bool any_internal = false;
  for (int v : s.tree.preorder()) {
    if (s.tree.depth(v) >= k_levels) continue;
    ++nodes;
    edges += s.tree.child_count(v);
    if (!s.tree.is_leaf(v)) any_internal = true;
  }
  if (used_fallback) *used_fallback = !any_internal;
  if (!any_internal) return uniform_offspring(width);
  const double dbar =
      std::clamp(static_cast<double>(edges) / static_cast<double>(nodes), 1.0,
                 static_cast<double>(width));
  return shifted_binomial(dbar, width);
}

ApproximateEstimate estimate_approximate(const SampleTree& s, int width,
                                         const McmcConfig& cfg) {
  McmcConfig local = cfg;
  if (local.theta0.empty()) local.theta0 = uniform_offspring(width);
  if (local.theta0.width() != width)
    throw std::invalid_argument("estimate_approximate: theta0 width mismatch");
  check_mcmc_inputs(s, local.theta0);

  ApproximateEstimate out;
  std::int64_t burn_in = local.burn_in;
  std::int64_t total = local.total;
  std::int64_t thin = local.thin;
  if (burn_in < 0 || total < 0 || thin < 1) {
    McmcConfig pilot_cfg = local;
    pilot_cfg.seed = mix_seed(local.seed, 0xA110);
    const ChainResult pilot = run_chain(s, pilot_cfg, 0, local.pilot, 1);
    out.diagnostic = raftery_lewis(pilot.log_g_trace, local.rl_quantile,
                                   local.rl_tolerance, local.rl_confidence);
    out.ran_pilot = true;
    burn_in = out.diagnostic.burn_in;
    total = std::min(out.diagnostic.total, local.max_total);
    thin = out.diagnostic.thin;
  }

  McmcConfig run_cfg = local;
  run_cfg.seed = mix_seed(local.seed, 0xF011);
  const ChainResult run = run_chain(s, run_cfg, burn_in, total, thin);
  if (run.samples.empty())
    throw std::invalid_argument("estimate_approximate: no samples recorded");

  const TermTable table =
      importance_term_table(run.samples, s.height_bound(), width, s.p);
  const MaximizeResult max = maximize(table, local.maximize);

  out.theta = max.theta;
  out.objective_value = max.objective_value;
  out.samples_used = static_cast<std::int64_t>(run.samples.size());
  out.burn_in = burn_in;
  out.total = total;
  out.thin = thin;
  out.acceptance_rate = run.acceptance_rate;
  return out;
}

}  // namespace gwest
