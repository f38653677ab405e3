// Apache License, Version 2.0, refer to LICENSE.txt
//
// Raftery-Lewis run-length diagnostic. Construction: dichotomize the trace
// at its q-quantile, find the smallest thinning whose indicator sequence
// passes a first-order-vs-second-order Markov BIC comparison, estimate the
// two-state transition probabilities, and read burn-in and required length
// off the resulting chain.
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gwest/errors.hpp"
#include "gwest/mcmc.hpp"
#include "gwest/numeric.hpp"

namespace gwest {

RafteryLewisResult raftery_lewis(std::span<const double> trace, double q,
                                 double r, double s) {
  if (!(q > 0.0 && q < 1.0) || !(r > 0.0) || !(s > 0.0 && s < 1.0))
    throw std::invalid_argument("raftery_lewis: bad (q, r, s)");

  const boost::math::normal_distribution<double> normal;
  const double phi = boost::math::quantile(normal, 0.5 * (1.0 + s));
  const auto n_min = static_cast<std::int64_t>(
      std::ceil(q * (1.0 - q) * phi * phi / (r * r)));

  RafteryLewisResult result;
  result.n_min = n_min;
  if (static_cast<std::int64_t>(trace.size()) < n_min)
    throw InconsistentInputError(
        "raftery_lewis: insufficient pilot run: need at least " +
        std::to_string(n_min) + " states, got " +
        std::to_string(trace.size()));

  const double cut =
      quantile_type7(std::vector<double>(trace.begin(), trace.end()), q);
  std::vector<int> dichot;
  dichot.reserve(trace.size());
  for (double x : trace) dichot.push_back(x <= cut ? 1 : 0);

  const auto degenerate_result = [&]() {
    RafteryLewisResult d;
    d.n_min = n_min;
    d.burn_in = 0;
    d.total = n_min;
    d.thin = 1;
    d.degenerate = true;
    return d;
  };

  // Smallest thinning whose indicator chain looks first-order Markov.
  std::int64_t kthin = 0;
  std::vector<int> thinned;
  for (;;) {
    ++kthin;
    thinned.clear();
    for (std::size_t i = 0; i < dichot.size();
         i += static_cast<std::size_t>(kthin))
      thinned.push_back(dichot[i]);
    const auto n = static_cast<std::int64_t>(thinned.size());
    if (n < 6) return degenerate_result();

    double tran[2][2][2] = {};
    for (std::size_t i = 2; i < thinned.size(); ++i)
      tran[thinned[i - 2]][thinned[i - 1]][thinned[i]] += 1.0;
    double g2 = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        for (int c = 0; c < 2; ++c) {
          if (tran[a][b][c] == 0.0) continue;
          const double row = tran[a][b][0] + tran[a][b][1];
          const double col = tran[0][b][c] + tran[1][b][c];
          const double mid =
              tran[0][b][0] + tran[0][b][1] + tran[1][b][0] + tran[1][b][1];
          const double fitted = row * col / mid;
          g2 += 2.0 * tran[a][b][c] * std::log(tran[a][b][c] / fitted);
        }
      }
    }
    const double bic = g2 - 2.0 * std::log(static_cast<double>(n - 2));
    if (bic < 0.0) break;
  }

  double pair[2][2] = {};
  for (std::size_t i = 1; i < thinned.size(); ++i)
    pair[thinned[i - 1]][thinned[i]] += 1.0;
  const double from0 = pair[0][0] + pair[0][1];
  const double from1 = pair[1][0] + pair[1][1];
  if (from0 == 0.0 || from1 == 0.0) return degenerate_result();
  const double alpha = pair[0][1] / from0;
  const double beta = pair[1][0] / from1;
  if (alpha <= 0.0 || beta <= 0.0) return degenerate_result();

  constexpr double kConvEps = 0.001;
  const double hold = std::abs(1.0 - alpha - beta);
  double burn_steps = 0.0;
  if (hold > 0.0 && hold < 1.0) {
    burn_steps = std::ceil(std::log(kConvEps * (alpha + beta) /
                                    std::max(alpha, beta)) /
                           std::log(hold));
    burn_steps = std::max(burn_steps, 0.0);
  }
  const double precision = (2.0 - alpha - beta) * alpha * beta * phi * phi /
                           ((alpha + beta) * (alpha + beta) * (alpha + beta) *
                            r * r);

  result.thin = kthin;
  result.burn_in = static_cast<std::int64_t>(burn_steps) * kthin;
  result.total = static_cast<std::int64_t>(std::ceil(precision)) * kthin;
  result.alpha = alpha;
  result.beta = beta;
  return result;
}

}  // namespace gwest
