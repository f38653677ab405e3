// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <limits>
#include <span>
#include <vector>

namespace gwest {

// Exact integer type for mapping counts and multiplicities. Counts overflow
// 64 bits quickly at W = 10, L = 5; floating point enters only at the
// log-likelihood boundary.
using BigInt = boost::multiprecision::cpp_int;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Pairwise (tree) summation; error grows like log(n) instead of n.
double pairwise_sum(std::span<const double> xs);

// log(sum(exp(xs))) with max shift and pairwise accumulation.
double log_sum_exp(std::span<const double> xs);
double log_add_exp(double a, double b);

// log of a non-negative big integer; -inf for zero. Accurate to ~1 ulp of
// a 64-bit mantissa regardless of magnitude.
double log_big(const BigInt& x);

BigInt factorial(unsigned n);
BigInt binomial(const BigInt& n, unsigned k);

// R's default (type 7) sample quantile. Copies its input.
double quantile_type7(std::vector<double> xs, double prob);
double median(std::vector<double> xs);

}  // namespace gwest
