// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/exact_mle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "gwest/errors.hpp"
#include "gwest/rng.hpp"

namespace gwest {

namespace {

TermTable build_term_table_impl(const SampleTree& s,
                                const NonIsoCatalog& catalog, bool parallel) {
  if (catalog.height() != s.height_bound())
    throw std::invalid_argument("term table: catalog height != sample height");
  s.validate(catalog.width());

  const SampleShapeIndex shapes(s);
  const auto& entries = catalog.entries();
  const auto n = static_cast<std::int64_t>(entries.size());
  std::vector<double> entry_logp(entries.size(), kNegInf);

  const bool full_observation = s.p >= 1.0;
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& e = entries[static_cast<std::size_t>(i)];
    if (shapes.node_count() > e.node_count) continue;
    if (full_observation && e.node_count != shapes.observed_count()) continue;
    const Tree g = catalog.materialize(static_cast<int>(i));
    entry_logp[static_cast<std::size_t>(i)] =
        log_prob_sample_given_tree(shapes, g);
  }

  // Deterministic reduction: group by census in entry-id order.
  std::map<std::vector<std::int64_t>, std::vector<double>> groups;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entry_logp[i] == kNegInf) continue;
    groups[entries[i].census].push_back(log_big(entries[i].multiplicity) +
                                        entry_logp[i]);
  }
  if (groups.empty())
    throw InconsistentInputError(
        "sample is inconsistent with (L=" + std::to_string(catalog.height()) +
        ", W=" + std::to_string(catalog.width()) + "): no tree embeds it");

  TermTable table;
  table.height = catalog.height();
  table.width = catalog.width();
  table.p = s.p;
  table.rows.reserve(groups.size());
  for (auto& [census, logs] : groups) {
    TermRow row;
    row.log_coeff = log_sum_exp(logs);
    row.exponents = census;
    row.y = std::accumulate(census.begin(), census.end(), std::int64_t{0});
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

TermTable build_term_table(const SampleTree& s, const NonIsoCatalog& catalog) {
  return build_term_table_impl(s, catalog, true);
}

TermTable build_term_table_serial(const SampleTree& s,
                                  const NonIsoCatalog& catalog) {
  return build_term_table_impl(s, catalog, false);
}

TermTable term_table_from_terms(
    std::span<const std::pair<std::vector<std::int64_t>, double>> terms,
    int height, int width, double p) {
  std::map<std::vector<std::int64_t>, std::vector<double>> groups;
  for (const auto& [census, log_coeff] : terms)
    groups[census].push_back(log_coeff);
  TermTable table;
  table.height = height;
  table.width = width;
  table.p = p;
  table.rows.reserve(groups.size());
  for (auto& [census, logs] : groups) {
    TermRow row;
    row.log_coeff = log_sum_exp(logs);
    row.exponents = census;
    row.y = std::accumulate(census.begin(), census.end(), std::int64_t{0});
    table.rows.push_back(std::move(row));
  }
  return table;
}

AlphaVector AlphaVector::from_free(std::span<const double> free_part) {
  AlphaVector a;
  a.values.assign(free_part.begin(), free_part.end());
  a.values.push_back(1.0);
  return a;
}

std::vector<double> AlphaVector::free_part() const {
  return {values.begin(), values.end() - 1};
}

OffspringDistribution AlphaVector::to_theta() const {
  const double log_z = log_sum_exp(values);
  OffspringDistribution theta;
  theta.probs.reserve(values.size());
  double sum = 0.0;
  for (double a : values) {
    const double t = std::exp(a - log_z);
    theta.probs.push_back(t);
    sum += t;
  }
  for (double& t : theta.probs) t /= sum;
  return theta;
}

namespace {

void check_alpha(const AlphaVector& alpha, const TermTable& table) {
  if (alpha.width() != table.width)
    throw std::invalid_argument("alpha width != table width");
  if (table.rows.empty()) throw std::invalid_argument("empty term table");
  for (double a : alpha.values)
    if (!std::isfinite(a)) throw std::invalid_argument("non-finite alpha");
}

// Log-space term values t_j = log c_j + x_j . alpha - y_j log Z.
void row_log_terms(const AlphaVector& alpha, const TermTable& table,
                   std::vector<double>& out) {
  const double log_z = log_sum_exp(alpha.values);
  out.clear();
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    double t = row.log_coeff - static_cast<double>(row.y) * log_z;
    for (std::size_t i = 0; i < row.exponents.size(); ++i)
      t += static_cast<double>(row.exponents[i]) * alpha.values[i];
    out.push_back(t);
  }
}

}  // namespace

double objective(const AlphaVector& alpha, const TermTable& table) {
  check_alpha(alpha, table);
  std::vector<double> terms;
  row_log_terms(alpha, table, terms);
  return log_sum_exp(terms);
}

std::vector<double> gradient(const AlphaVector& alpha, const TermTable& table) {
  check_alpha(alpha, table);
  std::vector<double> terms;
  row_log_terms(alpha, table, terms);
  const double total = log_sum_exp(terms);
  const OffspringDistribution theta = alpha.to_theta();
  const std::size_t free_dim = alpha.values.size() - 1;
  std::vector<double> grad(free_dim, 0.0);
  for (std::size_t j = 0; j < table.rows.size(); ++j) {
    const auto& row = table.rows[j];
    const double w = std::exp(terms[j] - total);
    for (std::size_t i = 0; i < free_dim; ++i) {
      grad[i] += w * (static_cast<double>(row.exponents[i]) -
                      static_cast<double>(row.y) * theta.probs[i]);
    }
  }
  return grad;
}

double log_likelihood_at(const OffspringDistribution& theta,
                         const TermTable& table) {
  std::vector<double> terms;
  terms.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    double t = row.log_coeff;
    for (std::size_t i = 0; i < row.exponents.size(); ++i) {
      if (row.exponents[i] == 0) continue;
      const double lp = theta.log_prob(static_cast<int>(i) + 1);
      if (lp == kNegInf) {
        t = kNegInf;
        break;
      }
      t += static_cast<double>(row.exponents[i]) * lp;
    }
    terms.push_back(t);
  }
  return log_sum_exp(terms);
}

namespace {

MaximizeResult maximize_impl(const TermTable& table, const MaximizeConfig& cfg,
                             bool parallel) {
  if (table.rows.empty()) throw std::invalid_argument("empty term table");
  if (cfg.starts < 1) throw std::invalid_argument("maximize: starts < 1");
  const int w = table.width;

  if (w == 1) {
    MaximizeResult r;
    r.alpha = AlphaVector::from_free({});
    r.theta = OffspringDistribution{{1.0}};
    r.objective_value = objective(r.alpha, table);
    return r;
  }

  const std::size_t dim = static_cast<std::size_t>(w) - 1;
  Rng rng(cfg.seed);
  std::vector<double> starts(static_cast<std::size_t>(cfg.starts) * dim);
  for (double& v : starts)
    v = cfg.box_half_width * (2.0 * rng.uniform() - 1.0);

  const auto start_of = [&](int k) {
    return std::span<const double>(starts.data() + static_cast<std::size_t>(k) * dim, dim);
  };

  std::vector<double> start_value(static_cast<std::size_t>(cfg.starts));
#pragma omp parallel for schedule(static) if (parallel)
  for (int k = 0; k < cfg.starts; ++k) {
    start_value[static_cast<std::size_t>(k)] =
        objective(AlphaVector::from_free(start_of(k)), table);
  }

  std::vector<int> order(static_cast<std::size_t>(cfg.starts));
  std::iota(order.begin(), order.end(), 0);
  const int refine_count =
      cfg.refine_top > 0 ? std::min(cfg.refine_top, cfg.starts) : cfg.starts;
  if (refine_count < cfg.starts) {
    std::partial_sort(order.begin(), order.begin() + refine_count, order.end(),
                      [&](int a, int b) {
                        const double va = start_value[static_cast<std::size_t>(a)];
                        const double vb = start_value[static_cast<std::size_t>(b)];
                        if (va != vb) return va > vb;
                        return a < b;
                      });
  }

  const ObjectiveFn neg_fg = [&](std::span<const double> x,
                                 std::span<double> grad_out) {
    const AlphaVector alpha = AlphaVector::from_free(x);
    const std::vector<double> g = gradient(alpha, table);
    for (std::size_t i = 0; i < g.size(); ++i) grad_out[i] = -g[i];
    return -objective(alpha, table);
  };

  struct Refined {
    double value = kNegInf;
    std::vector<double> x;
    bool ok = false;
  };
  std::vector<Refined> refined(static_cast<std::size_t>(refine_count));

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int r = 0; r < refine_count; ++r) {
    const int k = order[static_cast<std::size_t>(r)];
    std::vector<double> x0(start_of(k).begin(), start_of(k).end());
    const BfgsResult res = bfgs_minimize(std::move(x0), neg_fg, cfg.optimizer);
    Refined& slot = refined[static_cast<std::size_t>(r)];
    if (std::isfinite(res.value)) {
      slot.ok = true;
      slot.value = -res.value;
      slot.x = res.x;
    }
  }

  MaximizeResult out;
  out.failed_starts = 0;
  int best_r = -1;
  for (int r = 0; r < refine_count; ++r) {
    const auto& slot = refined[static_cast<std::size_t>(r)];
    if (!slot.ok) {
      ++out.failed_starts;
      continue;
    }
    if (best_r < 0) {
      best_r = r;
      continue;
    }
    const auto& best = refined[static_cast<std::size_t>(best_r)];
    const int k = order[static_cast<std::size_t>(r)];
    const int bk = order[static_cast<std::size_t>(best_r)];
    if (slot.value > best.value || (slot.value == best.value && k < bk))
      best_r = r;
  }
  if (best_r < 0) throw std::runtime_error("maximize: every start failed");

  out.alpha = AlphaVector::from_free(refined[static_cast<std::size_t>(best_r)].x);
  out.theta = out.alpha.to_theta();
  out.objective_value = refined[static_cast<std::size_t>(best_r)].value;
  out.best_start = order[static_cast<std::size_t>(best_r)];
  return out;
}

}  // namespace

MaximizeResult maximize(const TermTable& table, const MaximizeConfig& cfg) {
  return maximize_impl(table, cfg, true);
}

MaximizeResult maximize_serial(const TermTable& table,
                               const MaximizeConfig& cfg) {
  return maximize_impl(table, cfg, false);
}

ExactEstimate estimate_exact(const SampleTree& s, const NonIsoCatalog& catalog,
                             const MaximizeConfig& cfg) {
  const TermTable table = build_term_table(s, catalog);
  const MaximizeResult r = maximize(table, cfg);
  ExactEstimate est;
  est.theta = r.theta;
  est.objective_value = r.objective_value;
  est.table_rows = table.rows.size();
  est.catalog_entries = catalog.entries().size();
  est.best_start = r.best_start;
  return est;
}

ExactEstimate estimate_exact(const SampleTree& s, int width,
                             const ExactConfig& cfg) {
  const int height = s.height_bound();
  const BigInt n = count_noniso(height, width);
  if (n > cfg.catalog_budget)
    throw CapacityError("exact inference infeasible for (L=" +
                        std::to_string(height) + ", W=" +
                        std::to_string(width) + "): " + n.str() +
                        " non-isomorphic trees exceed the budget of " +
                        std::to_string(cfg.catalog_budget));
  const NonIsoCatalog catalog = NonIsoCatalog::load_or_enumerate(
      height, width, cfg.catalog_budget, cfg.catalog_dir);
  return estimate_exact(s, catalog, cfg.maximize);
}

}  // namespace gwest
