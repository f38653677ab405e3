// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gwest {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

bool finite(double x) { return std::isfinite(x); }

bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!finite(x)) return false;
  return true;
}

}  // namespace

BfgsResult bfgs_minimize(std::vector<double> x0, const ObjectiveFn& fg,
                         const BfgsConfig& cfg) {
  const std::size_t d = x0.size();
  BfgsResult result;
  result.x = x0;
  if (d == 0) {
    std::vector<double> g0;
    result.value = fg(x0, g0);
    result.converged = true;
    return result;
  }

  std::vector<double> x = std::move(x0);
  std::vector<double> g(d), g_new(d), dir(d), x_new(d), s(d), y(d), hy(d);
  double f = fg(x, g);
  if (!finite(f) || !all_finite(g)) {
    result.value = std::numeric_limits<double>::infinity();
    return result;  // caller discards this start
  }
  result.value = f;

  // Inverse Hessian approximation, row-major d x d, starts at identity.
  std::vector<double> h(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) h[i * d + i] = 1.0;

  constexpr double kArmijo = 1e-4;
  bool first_iteration = true;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    result.iterations = iter;
    if (inf_norm(g) <= cfg.grad_tol) {
      result.converged = true;
      break;
    }

    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc -= h[i * d + j] * g[j];
      dir[i] = acc;
    }
    double slope = dot(dir, g);
    if (!(slope < 0.0)) {
      // Not a descent direction: reset curvature.
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) h[i * d + i] = 1.0;
      for (std::size_t i = 0; i < d; ++i) dir[i] = -g[i];
      slope = dot(dir, g);
      if (!(slope < 0.0)) break;  // gradient vanished
    }

    double t = first_iteration ? cfg.initial_step : 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      for (std::size_t i = 0; i < d; ++i) x_new[i] = x[i] + t * dir[i];
      f_new = fg(x_new, g_new);
      if (finite(f_new) && all_finite(g_new) &&
          f_new <= f + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no further progress along any tried step

    for (std::size_t i = 0; i < d; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double improvement = f - f_new;
    x.swap(x_new);
    g.swap(g_new);
    const double f_prev = f;
    f = f_new;
    if (f < result.value) {
      result.value = f;
      result.x = x;
    }
    first_iteration = false;

    const double ys = dot(y, s);
    if (ys > 1e-12 * std::sqrt(dot(s, s) * dot(y, y)) && ys > 0.0) {
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / ys;
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += h[i * d + j] * y[j];
        hy[i] = acc;
      }
      const double yhy = dot(y, std::span<const double>(hy));
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          h[i * d + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] -
                                 hy[i] * s[j] - s[i] * hy[j]);
        }
      }
    }

    if (improvement <= cfg.rel_tol * (std::abs(f_prev) + cfg.rel_tol) &&
        inf_norm(g) <= cfg.grad_tol) {
      result.converged = true;
      result.iterations = iter + 1;
      break;
    }
  }
  return result;
}

}  // namespace gwest
