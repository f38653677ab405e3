// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gwest/evaluation.hpp"
#include "gwest/exact_mle.hpp"
#include "gwest/mcmc.hpp"

namespace gwest {

struct DistributionSpec {
  std::string id;
  OffspringDistribution theta;
};

// Dataset protocol: trees_per_distribution trees per distribution, and for
// each (tree, p) pair samples_per_pair samples. Every sample is a separate
// estimation problem; nothing pools across samples or trees.
struct ExperimentSpec {
  std::vector<DistributionSpec> distributions;
  int height = 3;  // generation count of the leaves
  std::vector<double> p_grid;
  int trees_per_distribution = 10;
  int samples_per_pair = 10;
  // "exact", "mcmc", "empirical-1".."empirical-3"
  std::vector<std::string> estimators;
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0 = library default, 1 = serial
  int resample_budget = 1000;
  // theta0 policy for mcmc: "uniform" or "from-sample"
  std::string mcmc_theta0 = "uniform";
  int theta0_levels = 2;
  ExactConfig exact;
  McmcConfig mcmc;

  int width() const;
  void validate() const;
};

struct ResultRow {
  std::string dataset_id;
  std::string dist_id;
  int tree_idx = 0;
  double p = 0.0;
  int sample_idx = 0;
  std::string estimator;
  std::vector<double> theta_hat;
  double kl = 0.0;
  std::vector<double> squared_errors;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
};

struct FailureRow {
  std::string dataset_id;
  std::string estimator;
  std::string message;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;        // sorted by (dataset_id, estimator)
  std::vector<FailureRow> failures;   // recorded, never fatal
  std::int64_t resampled_empty = 0;   // empty draws retried with a new seed
  std::int64_t skipped = 0;           // rows already present on resume
};

struct RunHooks {
  // Return true to skip a (dataset, estimator) pair (resume support).
  std::function<bool(const std::string&, const std::string&)> skip;
  // Called for every finished row, serialized across workers.
  std::function<void(const ResultRow&)> on_row;
  std::function<void(const std::string&)> on_log;
};

// Runs the full protocol with per-dataset derived seeds. Datasets are
// independent units of work and run in a parallel pool; the result is
// identical for a given master seed regardless of thread count.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const RunHooks* hooks = nullptr);

// Boxplot-ready aggregation keyed by (dist_id, p, estimator, parameter):
// five-number summary of the per-estimate squared errors (parameter 1..W)
// and of the KL divergence (parameter 0).
struct AggregateRow {
  std::string dist_id;
  double p = 0.0;
  std::string estimator;
  int parameter = 0;  // 0 = KL
  std::int64_t n = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

std::vector<AggregateRow> aggregate_results(std::span<const ResultRow> rows);

}  // namespace gwest
