// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/evaluation.hpp"

#include <cmath>
#include <stdexcept>

#include "gwest/numeric.hpp"

namespace gwest {

double kl_divergence_discounted(const OffspringDistribution& theta,
                                const OffspringDistribution& theta_hat,
                                double eps) {
  theta.validate();
  if (theta.width() != theta_hat.width())
    throw std::invalid_argument("kl divergence: width mismatch");
  std::vector<double> smoothed = theta_hat.probs;
  int zeros = 0;
  for (double v : smoothed)
    if (v == 0.0) ++zeros;
  if (zeros > 0) {
    const int nonzeros = theta_hat.width() - zeros;
    if (nonzeros == 0)
      throw std::invalid_argument("kl divergence: estimate is all zero");
    for (double& v : smoothed)
      v = v == 0.0 ? eps / zeros : v - eps / nonzeros;
  }
  double kl = 0.0;
  for (int i = 0; i < theta.width(); ++i) {
    const double t = theta.probs[static_cast<std::size_t>(i)];
    if (t == 0.0) continue;  // 0 * log 0 := 0
    kl += t * (std::log(t) - std::log(smoothed[static_cast<std::size_t>(i)]));
  }
  return kl;
}

std::vector<double> mse_per_parameter(
    std::span<const OffspringDistribution> estimates,
    const OffspringDistribution& theta) {
  if (estimates.empty())
    throw std::invalid_argument("mse_per_parameter: no estimates");
  std::vector<double> mse(static_cast<std::size_t>(theta.width()), 0.0);
  for (const auto& est : estimates) {
    if (est.width() != theta.width())
      throw std::invalid_argument("mse_per_parameter: width mismatch");
    for (int i = 0; i < theta.width(); ++i) {
      const double d = est.probs[static_cast<std::size_t>(i)] -
                       theta.probs[static_cast<std::size_t>(i)];
      mse[static_cast<std::size_t>(i)] += d * d;
    }
  }
  for (double& v : mse) v /= static_cast<double>(estimates.size());
  return mse;
}

OffspringDistribution empirical_estimator(const SampleTree& s, int width,
                                          int top_levels) {
  if (top_levels < 1)
    throw std::invalid_argument("empirical_estimator: top_levels < 1");
  std::vector<double> hist(static_cast<std::size_t>(width), 0.0);
  double total = 0.0;
  for (int v : s.tree.preorder()) {
    if (s.tree.depth(v) >= top_levels) continue;
    const int d = s.tree.child_count(v);
    if (d == 0) continue;
    if (d > width)
      throw std::invalid_argument("empirical_estimator: degree exceeds W");
    hist[static_cast<std::size_t>(d - 1)] += 1.0;
    total += 1.0;
  }
  if (total == 0.0)
    throw std::invalid_argument(
        "empirical_estimator: no internal node within the top " +
        std::to_string(top_levels) + " levels; increase top_levels");
  for (double& v : hist) v /= total;
  return OffspringDistribution{std::move(hist)};
}

OffspringDistribution truncated_poisson(double lambda, int width) {
  if (!(lambda > 0.0)) throw std::invalid_argument("truncated_poisson: lambda");
  if (width < 1) throw std::invalid_argument("truncated_poisson: width");
  std::vector<double> mass(static_cast<std::size_t>(width));
  double log_term = std::log(lambda) - lambda;  // log(lambda^1 e^-lambda / 1!)
  for (int i = 1; i <= width; ++i) {
    mass[static_cast<std::size_t>(i - 1)] = std::exp(log_term);
    log_term += std::log(lambda) - std::log(static_cast<double>(i + 1));
  }
  double sum = 0.0;
  for (double v : mass) sum += v;
  for (double& v : mass) v /= sum;
  return OffspringDistribution{std::move(mass)};
}

OffspringDistribution zipf(double alpha, int width) {
  if (!(alpha > 0.0)) throw std::invalid_argument("zipf: alpha");
  if (width < 1) throw std::invalid_argument("zipf: width");
  std::vector<double> mass(static_cast<std::size_t>(width));
  double sum = 0.0;
  for (int i = 1; i <= width; ++i) {
    const double v = std::pow(static_cast<double>(i), -alpha);
    mass[static_cast<std::size_t>(i - 1)] = v;
    sum += v;
  }
  for (double& v : mass) v /= sum;
  return OffspringDistribution{std::move(mass)};
}

}  // namespace gwest
