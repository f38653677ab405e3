// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gwest/exact_mle.hpp"
#include "gwest/sampling.hpp"

namespace gwest {

// Metropolis-Hastings over full trees consistent with a sample. The target
// g(G) is proportional to P(S|G) P(G|theta0) on the space of generated
// (ordered) trees; on isomorphism classes that is m_G P(S|G) P(G|theta0).

enum class ProposalAction { kAdd, kRemove };

struct ChainState {
  Tree tree;
  double log_p_sample = 0.0;  // log P(S | X), cached
  double log_p_prior = 0.0;   // log P(X | theta0), cached
  std::int64_t step = 0;

  int node_count() const { return tree.node_count(); }
  int leaf_count() const { return tree.leaf_count(); }
  int internal_count() const { return tree.internal_count(); }
};

struct ProposalOutcome {
  Tree candidate{0};
  ProposalAction action = ProposalAction::kAdd;
  int target_node = 0;      // v
  int target_degree = 0;    // d_v before the move
  double log_q_forward = 0.0;
  double log_q_reverse = 0.0;
  double branch_log_prob = 0.0;  // log P(T_v | theta0)
  double candidate_log_p_prior = 0.0;
};

struct RafteryLewisResult {
  std::int64_t burn_in = 0;  // M, in original-chain iterations
  std::int64_t total = 0;    // N, post-burn-in iterations (thinning included)
  std::int64_t thin = 1;     // k
  std::int64_t n_min = 0;
  double alpha = 0.0;  // P(0 -> 1) of the dichotomized thinned chain
  double beta = 0.0;   // P(1 -> 0)
  bool degenerate = false;
};

struct McmcConfig {
  OffspringDistribution theta0;  // empty => uniform over {1..W}
  // Explicit schedule; any value < 0 is filled in by the pilot diagnostic.
  std::int64_t burn_in = -1;
  std::int64_t total = -1;
  std::int64_t thin = -1;
  std::int64_t pilot = 10000;        // recorded pilot states, thin 1
  std::int64_t max_total = 500000;   // cap on the recommended N
  double rl_quantile = 0.025;
  double rl_tolerance = 0.005;
  double rl_confidence = 0.95;
  std::uint64_t seed = 1;
  // Use the per-branch reverse weights (with the 1/d child-pick factors)
  // instead of the multiplicity-consistent ones. The per-branch ratio skews
  // the stationary distribution toward small trees; kept for comparison.
  bool per_branch_weights = false;
  // Recompute cached quantities every n steps and compare (0 = off).
  std::int64_t check_cache_every = 0;
  MaximizeConfig maximize;
};

// X_0: the sample extended to a full tree, every sample leaf above depth L
// continued by GW(theta0), so both P(X_0|theta0) and P(S|X_0) are positive.
ChainState init_chain(const SampleTree& s, const OffspringDistribution& theta0,
                      Rng& rng);

// One transition-kernel draw: uniform internal node, then add a GW(theta0)
// branch or remove a uniformly chosen child subtree; degree rules force the
// action at d_v = 1 and d_v = W. All bookkeeping in log space.
ProposalOutcome propose(const ChainState& state,
                        const OffspringDistribution& theta0, Rng& rng,
                        bool per_branch_weights = false);

// log of min(1, r) with r = P(S|X')P(X'|theta0) q(X'->X) /
// (P(S|X)P(X|theta0) q(X->X')); -inf when the candidate is inconsistent
// with the sample.
double acceptance_log_ratio(const ChainState& state,
                            const ProposalOutcome& proposal,
                            const SampleTree& s);

struct McmcSample {
  OffspringCensus census;
  double log_p_prior = 0.0;  // log P(G_i | theta0)
};

struct ChainResult {
  std::vector<McmcSample> samples;
  std::vector<double> log_g_trace;  // log P(S|X) + log P(X|theta0) per sample
  double acceptance_rate = 0.0;
  std::int64_t steps = 0;
};

// Burn-in, then record every thin-th state's census and prior log-prob
// (everything downstream depends on the tree only through those).
// Deterministic given cfg.seed.
ChainResult run_chain(const SampleTree& s, const McmcConfig& cfg,
                      std::int64_t burn_in, std::int64_t total,
                      std::int64_t thin);

// Raftery-Lewis diagnostic for estimating the q-quantile of the trace
// within tolerance r at confidence s: dichotomize at the sample quantile,
// thin until the indicator chain is first-order Markov by BIC, then read
// burn-in and required length off the two-state transition estimates.
// Throws InconsistentInputError when the trace is shorter than N_min.
RafteryLewisResult raftery_lewis(std::span<const double> trace,
                                 double q = 0.025, double r = 0.005,
                                 double s = 0.95);

// log sum_i P(G_i|theta)/P(G_i|theta0); the argmax over theta equals the
// argmax of the importance-weighted likelihood approximation.
double importance_objective(const OffspringDistribution& theta,
                            std::span<const McmcSample> samples,
                            const OffspringDistribution& theta0);

// Term table with one row per distinct sampled census and coefficient
// 1/P(G_i|theta0), feeding the shared maximization machinery.
TermTable importance_term_table(std::span<const McmcSample> samples,
                                int height, int width, double p);

// Binomial-shaped theta0 whose mean matches the average observed degree of
// the sample's top k levels: 1 + Binomial(W-1, (dbar-1)/(W-1)). Falls back
// to uniform when those levels hold no internal node.
OffspringDistribution theta0_from_sample(const SampleTree& s, int width,
                                         int k_levels = 2,
                                         bool* used_fallback = nullptr);

OffspringDistribution shifted_binomial(double mean, int width);

struct ApproximateEstimate {
  OffspringDistribution theta;
  double objective_value = 0.0;
  RafteryLewisResult diagnostic;
  bool ran_pilot = false;
  std::int64_t samples_used = 0;
  std::int64_t burn_in = 0;
  std::int64_t total = 0;
  std::int64_t thin = 1;
  double acceptance_rate = 0.0;
};

// Pilot run -> Raftery-Lewis -> full run at the recommended schedule ->
// importance-weighted maximization. Explicit (burn_in, total, thin) in the
// config bypass the pilot.
ApproximateEstimate estimate_approximate(const SampleTree& s, int width,
                                         const McmcConfig& cfg);

}  // namespace gwest
