// Apache License, Version 2.0, refer to LICENSE.txt
#include "gwest/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gwest {

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  std::vector<double> terms;
  terms.reserve(xs.size());
  for (double x : xs) terms.push_back(std::exp(x - m));
  return m + std::log(pairwise_sum(terms));
}

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double log_big(const BigInt& x) {
  if (x < 0) throw std::domain_error("log_big: negative argument");
  if (x == 0) return kNegInf;
  const unsigned bits = boost::multiprecision::msb(x) + 1;
  if (bits <= 960) return std::log(x.convert_to<double>());
  BigInt top = x;
  top >>= bits - 64;
  const double mantissa = top.convert_to<double>();
  return std::log(mantissa) + (bits - 64) * std::numbers::ln2;
}

BigInt factorial(unsigned n) {
  BigInt f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

BigInt binomial(const BigInt& n, unsigned k) {
  if (n < 0) throw std::domain_error("binomial: negative n");
  if (n < k) return 0;
  BigInt acc = 1;
  for (unsigned i = 1; i <= k; ++i) {
    acc *= n - (i - 1);
    acc /= i;  // exact: acc is a running binomial coefficient
  }
  return acc;
}

double quantile_type7(std::vector<double> xs, double prob) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = h - static_cast<double>(lo);
  return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

double median(std::vector<double> xs) {
  return quantile_type7(std::move(xs), 0.5);
}

}  // namespace gwest
