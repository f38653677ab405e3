// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "gwest/errors.hpp"

namespace gwest {

namespace {

std::string format_dataset_id(const std::string& dist_id, int tree_idx,
                              double p, int sample_idx) {
  std::ostringstream out;
  out << dist_id << "_t" << tree_idx << "_p" << p << "_s" << sample_idx;
  return out.str();
}

int parse_empirical_levels(const std::string& name) {
  // "empirical-1".."empirical-3"
  if (name.rfind("empirical-", 0) != 0) return 0;
  const int k = std::stoi(name.substr(10));
  if (k < 1 || k > 3)
    throw std::invalid_argument("estimator " + name + ": top level not in 1..3");
  return k;
}

struct Dataset {
  int dist_idx;
  int tree_idx;
  int p_idx;
  int sample_idx;
};

}  // namespace

int ExperimentSpec::width() const {
  return distributions.empty() ? 0 : distributions.front().theta.width();
}

void ExperimentSpec::validate() const {
  if (distributions.empty())
    throw std::invalid_argument("experiment: no distributions");
  for (const auto& d : distributions) {
    d.theta.validate();
    if (d.theta.width() != width())
      throw std::invalid_argument(
          "experiment: all distributions must share one W");
    if (d.id.empty()) throw std::invalid_argument("experiment: empty dist id");
  }
  if (p_grid.empty()) throw std::invalid_argument("experiment: empty p grid");
  for (double p : p_grid)
    if (!(p > 0.0 && p <= 1.0))
      throw std::invalid_argument("experiment: p outside (0, 1]");
  if (height < 1) throw std::invalid_argument("experiment: height < 1");
  if (trees_per_distribution < 1 || samples_per_pair < 1)
    throw std::invalid_argument("experiment: counts must be positive");
  if (estimators.empty())
    throw std::invalid_argument("experiment: no estimators");
  for (const auto& e : estimators) {
    if (e != "exact" && e != "mcmc" && parse_empirical_levels(e) == 0)
      throw std::invalid_argument("experiment: unknown estimator " + e);
  }
}

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const RunHooks* hooks) {
  spec.validate();
  const int w = spec.width();

  // Trees are generated up front; the derived seed depends only on the
  // (distribution, tree) indices.
  std::vector<std::vector<Tree>> trees(spec.distributions.size());
  for (std::size_t di = 0; di < spec.distributions.size(); ++di) {
    trees[di].reserve(static_cast<std::size_t>(spec.trees_per_distribution));
    for (int ti = 0; ti < spec.trees_per_distribution; ++ti) {
      const std::uint64_t seed = mix_seed(
          spec.master_seed, {0, di, static_cast<std::uint64_t>(ti)});
      trees[di].push_back(
          gw_generate(spec.distributions[di].theta, spec.height, seed));
    }
  }

  const bool wants_exact =
      std::find(spec.estimators.begin(), spec.estimators.end(), "exact") !=
      spec.estimators.end();
  std::unique_ptr<NonIsoCatalog> catalog;
  std::string exact_unavailable;
  if (wants_exact) {
    try {
      const BigInt n = count_noniso(spec.height, w);
      if (n > spec.exact.catalog_budget)
        throw CapacityError("exact inference infeasible for (L=" +
                            std::to_string(spec.height) + ", W=" +
                            std::to_string(w) + "): " + n.str() +
                            " non-isomorphic trees exceed the budget of " +
                            std::to_string(spec.exact.catalog_budget));
      catalog = std::make_unique<NonIsoCatalog>(NonIsoCatalog::load_or_enumerate(
          spec.height, w, spec.exact.catalog_budget, spec.exact.catalog_dir));
    } catch (const CapacityError& e) {
      exact_unavailable = e.what();
    }
  }

  std::vector<Dataset> datasets;
  for (std::size_t di = 0; di < spec.distributions.size(); ++di)
    for (int ti = 0; ti < spec.trees_per_distribution; ++ti)
      for (std::size_t pi = 0; pi < spec.p_grid.size(); ++pi)
        for (int si = 0; si < spec.samples_per_pair; ++si)
          datasets.push_back({static_cast<int>(di), ti, static_cast<int>(pi),
                              si});

  ExperimentResult result;
  std::mutex sink_mutex;
  std::int64_t resampled = 0;
  std::int64_t skipped = 0;

  const auto run_dataset = [&](const Dataset& ds) {
    const auto& dist = spec.distributions[static_cast<std::size_t>(ds.dist_idx)];
    const double p = spec.p_grid[static_cast<std::size_t>(ds.p_idx)];
    const Tree& tree =
        trees[static_cast<std::size_t>(ds.dist_idx)][static_cast<std::size_t>(ds.tree_idx)];
    const std::string dataset_id =
        format_dataset_id(dist.id, ds.tree_idx, p, ds.sample_idx);

    std::vector<ResultRow> local_rows;
    std::vector<FailureRow> local_failures;
    std::int64_t local_resampled = 0;

    // Empty draws retry with the next derived seed.
    SampleTree sample{Tree(0), p};
    std::uint64_t sample_seed = 0;
    bool have_sample = false;
    for (int attempt = 0; attempt < spec.resample_budget; ++attempt) {
      sample_seed = mix_seed(
          spec.master_seed,
          {1, static_cast<std::uint64_t>(ds.dist_idx),
           static_cast<std::uint64_t>(ds.tree_idx),
           static_cast<std::uint64_t>(ds.p_idx),
           static_cast<std::uint64_t>(ds.sample_idx),
           static_cast<std::uint64_t>(attempt)});
      const std::vector<int> observed = sample_nodes(tree, p, sample_seed);
      if (observed.empty()) {
        ++local_resampled;
        continue;
      }
      sample = build_sample(tree, observed, p);
      have_sample = true;
      break;
    }
    if (!have_sample) {
      local_failures.push_back(
          {dataset_id, "*", "no non-empty sample within the retry budget"});
    } else {
      for (std::size_t ei = 0; ei < spec.estimators.size(); ++ei) {
        const std::string& estimator = spec.estimators[ei];
        if (hooks && hooks->skip && hooks->skip(dataset_id, estimator)) {
          std::lock_guard<std::mutex> lock(sink_mutex);
          ++skipped;
          continue;
        }
        const std::uint64_t est_seed = mix_seed(
            spec.master_seed,
            {2, static_cast<std::uint64_t>(ds.dist_idx),
             static_cast<std::uint64_t>(ds.tree_idx),
             static_cast<std::uint64_t>(ds.p_idx),
             static_cast<std::uint64_t>(ds.sample_idx), ei});
        ResultRow row;
        row.dataset_id = dataset_id;
        row.dist_id = dist.id;
        row.tree_idx = ds.tree_idx;
        row.p = p;
        row.sample_idx = ds.sample_idx;
        row.estimator = estimator;
        row.seed = est_seed;
        const auto start = std::chrono::steady_clock::now();
        try {
          OffspringDistribution theta_hat;
          if (estimator == "exact") {
            if (!catalog) throw CapacityError(exact_unavailable);
            MaximizeConfig mc = spec.exact.maximize;
            mc.seed = est_seed;
            theta_hat = estimate_exact(sample, *catalog, mc).theta;
          } else if (estimator == "mcmc") {
            McmcConfig mc = spec.mcmc;
            mc.seed = est_seed;
            mc.maximize.seed = mix_seed(est_seed, 0x3a1);
            if (spec.mcmc_theta0 == "from-sample")
              mc.theta0 = theta0_from_sample(sample, w, spec.theta0_levels);
            theta_hat = estimate_approximate(sample, w, mc).theta;
          } else {
            theta_hat =
                empirical_estimator(sample, w, parse_empirical_levels(estimator));
          }
          const auto stop = std::chrono::steady_clock::now();
          row.wall_ms =
              std::chrono::duration<double, std::milli>(stop - start).count();
          row.theta_hat = theta_hat.probs;
          row.kl = kl_divergence_discounted(dist.theta, theta_hat);
          row.squared_errors.resize(static_cast<std::size_t>(w));
          for (int i = 0; i < w; ++i) {
            const double d = theta_hat.probs[static_cast<std::size_t>(i)] -
                             dist.theta.probs[static_cast<std::size_t>(i)];
            row.squared_errors[static_cast<std::size_t>(i)] = d * d;
          }
          local_rows.push_back(std::move(row));
        } catch (const std::exception& e) {
          local_failures.push_back({dataset_id, estimator, e.what()});
        }
      }
    }

    std::lock_guard<std::mutex> lock(sink_mutex);
    for (auto& r : local_rows) {
      if (hooks && hooks->on_row) hooks->on_row(r);
      result.rows.push_back(std::move(r));
    }
    for (auto& f : local_failures) {
      if (hooks && hooks->on_log)
        hooks->on_log(f.dataset_id + " " + f.estimator + ": " + f.message);
      result.failures.push_back(std::move(f));
    }
    resampled += local_resampled;
  };

  const auto n = static_cast<std::int64_t>(datasets.size());
  if (spec.threads == 1) {
    for (std::int64_t i = 0; i < n; ++i)
      run_dataset(datasets[static_cast<std::size_t>(i)]);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i)
      run_dataset(datasets[static_cast<std::size_t>(i)]);
  }

  result.resampled_empty = resampled;
  result.skipped = skipped;
  std::sort(result.rows.begin(), result.rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              if (a.dataset_id != b.dataset_id)
                return a.dataset_id < b.dataset_id;
              return a.estimator < b.estimator;
            });
  std::sort(result.failures.begin(), result.failures.end(),
            [](const FailureRow& a, const FailureRow& b) {
              if (a.dataset_id != b.dataset_id)
                return a.dataset_id < b.dataset_id;
              return a.estimator < b.estimator;
            });
  return result;
}

std::vector<AggregateRow> aggregate_results(std::span<const ResultRow> rows) {
  // (dist, p, estimator, parameter) -> values; parameter 0 carries KL.
  std::map<std::tuple<std::string, double, std::string, int>,
           std::vector<double>>
      cells;
  for (const auto& row : rows) {
    cells[{row.dist_id, row.p, row.estimator, 0}].push_back(row.kl);
    for (std::size_t i = 0; i < row.squared_errors.size(); ++i)
      cells[{row.dist_id, row.p, row.estimator, static_cast<int>(i) + 1}]
          .push_back(row.squared_errors[i]);
  }
  std::vector<AggregateRow> out;
  out.reserve(cells.size());
  for (auto& [key, values] : cells) {
    AggregateRow agg;
    agg.dist_id = std::get<0>(key);
    agg.p = std::get<1>(key);
    agg.estimator = std::get<2>(key);
    agg.parameter = std::get<3>(key);
    agg.n = static_cast<std::int64_t>(values.size());
    agg.min = quantile_type7(values, 0.0);
    agg.q1 = quantile_type7(values, 0.25);
    agg.median = quantile_type7(values, 0.5);
    agg.q3 = quantile_type7(values, 0.75);
    agg.max = quantile_type7(values, 1.0);
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace gwest
