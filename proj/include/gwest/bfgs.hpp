// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace gwest {

struct BfgsConfig {
  int max_iterations = 100;
  // Stop once an accepted step improves f by no more than
  // rel_tol * (|f| + rel_tol), provided the gradient is small too.
  double rel_tol = 1e-8;
  double grad_tol = 1e-6;  // infinity norm
  double initial_step = 1e-3;  // first line-search trial step
};

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Objective callback: returns f(x) and writes grad(x) into the second span.
using ObjectiveFn =
    std::function<double(std::span<const double>, std::span<double>)>;

// Dense BFGS minimization with Armijo backtracking. Dimension is expected
// to be small (here at most W - 1 <= 9). Returns the best point seen, so a
// result is never worse than the start.
BfgsResult bfgs_minimize(std::vector<double> x0, const ObjectiveFn& fg,
                         const BfgsConfig& cfg = {});

}  // namespace gwest
