// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <span>
#include <vector>

#include "gwest/sampling.hpp"
#include "gwest/tree.hpp"

namespace gwest {

// D_KL(theta || theta_hat) with absolute discounting: eps of probability
// mass spreads over the zero estimates, discounted equally from the
// non-zero ones. Smoothing is a no-op when theta_hat is strictly positive;
// zero entries of theta contribute nothing.
double kl_divergence_discounted(const OffspringDistribution& theta,
                                const OffspringDistribution& theta_hat,
                                double eps = 1e-7);

// Mean over estimates of (theta_hat_i - theta_i)^2, per parameter.
std::vector<double> mse_per_parameter(
    std::span<const OffspringDistribution> estimates,
    const OffspringDistribution& theta);

// Degree histogram of the sample's internal nodes at depths 0..top_levels-1,
// normalized over {1..W}; unseen counts stay zero. Throws when those levels
// hold no internal node.
OffspringDistribution empirical_estimator(const SampleTree& s, int width,
                                          int top_levels);

// Poisson(lambda) and Zipf(alpha) restricted to {1..W} and renormalized.
OffspringDistribution truncated_poisson(double lambda, int width);
OffspringDistribution zipf(double alpha, int width);

}  // namespace gwest
