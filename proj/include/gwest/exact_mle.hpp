// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "gwest/bfgs.hpp"
#include "gwest/enumeration.hpp"
#include "gwest/sampling.hpp"

namespace gwest {

// One grouped likelihood term: coeff * prod_i theta_i^{exponents_i}. Rows
// with distinct exponent vectors never merge; coefficients live in log
// space because they span hundreds of orders of magnitude at W = 10.
struct TermRow {
  double log_coeff = 0.0;
  std::vector<std::int64_t> exponents;  // x_j1..x_jW
  std::int64_t y = 0;                   // sum of exponents
};

struct TermTable {
  int height = 0;
  int width = 0;
  double p = 1.0;
  std::vector<TermRow> rows;
};

// Groups m_i * P(S|G_i) over the catalog by offspring census. Embedding
// counts run in parallel across entries; the log-space reduction happens
// serially in id order, so results are identical to the serial variant.
// Throws InconsistentInputError when no catalog tree embeds the sample.
TermTable build_term_table(const SampleTree& s, const NonIsoCatalog& catalog);
TermTable build_term_table_serial(const SampleTree& s,
                                  const NonIsoCatalog& catalog);

// Builds a term table directly from (census, log-coefficient) pairs; rows
// merge by census with log-sum-exp. Used by the importance-sampling
// estimator, which reuses the same maximization machinery.
TermTable term_table_from_terms(
    std::span<const std::pair<std::vector<std::int64_t>, double>> terms,
    int height, int width, double p);

// Unconstrained reparameterization theta_i = exp(alpha_i) / Z with alpha_W
// pinned to 1; the first W-1 entries are free.
struct AlphaVector {
  std::vector<double> values;  // size W, last entry == 1

  static AlphaVector from_free(std::span<const double> free_part);
  std::vector<double> free_part() const;
  OffspringDistribution to_theta() const;
  int width() const { return static_cast<int>(values.size()); }
};

// log l(alpha) = log sum_j c_j exp(sum_i x_ji alpha_i - y_j log Z), via
// logsumexp; finite for finite alpha on a non-empty table.
double objective(const AlphaVector& alpha, const TermTable& table);

// Analytic gradient of log l with respect to the free entries:
// d/d alpha_i = sum_j w_j (x_ji - y_j theta_i), weights w_j normalized in
// log space. Matches central finite differences.
std::vector<double> gradient(const AlphaVector& alpha, const TermTable& table);

// Direct evaluation at a point on the simplex (no reparameterization):
// log sum_j c_j prod_i theta_i^{x_ji}.
double log_likelihood_at(const OffspringDistribution& theta,
                         const TermTable& table);

struct MaximizeConfig {
  int starts = 10000;
  double box_half_width = 10.0;
  // Refine the best `refine_top` starts with BFGS; 0 refines every start.
  int refine_top = 0;
  BfgsConfig optimizer;
  std::uint64_t seed = 1;
};

struct MaximizeResult {
  AlphaVector alpha;
  OffspringDistribution theta;
  double objective_value = 0.0;
  int best_start = 0;  // ties break toward the lowest start index
  int failed_starts = 0;
};

// Multistart quasi-Newton maximization of log l. Starts are sampled
// uniformly from [-box, box]^{W-1}; refinements are independent and run in
// parallel; a diverging start is discarded and only a failure of every
// start is an error.
MaximizeResult maximize(const TermTable& table, const MaximizeConfig& cfg);
MaximizeResult maximize_serial(const TermTable& table,
                               const MaximizeConfig& cfg);

struct ExactConfig {
  MaximizeConfig maximize;
  std::int64_t catalog_budget = NonIsoCatalog::kDefaultBudget;
  std::optional<std::filesystem::path> catalog_dir;
};

struct ExactEstimate {
  OffspringDistribution theta;
  double objective_value = 0.0;
  std::size_t table_rows = 0;
  std::size_t catalog_entries = 0;
  int best_start = 0;
};

// theta-hat = argmax_theta P(S|theta) over the enumerated catalog. Throws
// CapacityError when (L, W) is beyond the enumeration budget.
ExactEstimate estimate_exact(const SampleTree& s, int width,
                             const ExactConfig& cfg = {});
ExactEstimate estimate_exact(const SampleTree& s, const NonIsoCatalog& catalog,
                             const MaximizeConfig& cfg);

}  // namespace gwest
