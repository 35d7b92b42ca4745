#include "topicblocks/util/math.hpp"

#include <algorithm>
#include <math.h>

namespace topicblocks {

namespace {

constexpr std::int64_t kFactorialTableSize = 1 << 21;

const std::vector<double>& factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kFactorialTableSize);
    for (std::int64_t i = 0; i < kFactorialTableSize; ++i)
      t[static_cast<std::size_t>(i)] = log_gamma(static_cast<double>(i) + 1.0);
    return t;
  }();
  return table;
}

}  // namespace

double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double log_factorial(std::int64_t n) {
  if (n < 0) return kNegInf;
  if (n < kFactorialTableSize) return factorial_table()[static_cast<std::size_t>(n)];
  return log_gamma(static_cast<double>(n) + 1.0);
}

double log_double_factorial_even(std::int64_t n) {
  return static_cast<double>(n / 2) * std::log(2.0) + log_factorial(n / 2);
}

double log_binom(double n, double k) {
  if (k < 0 || n < 0 || k > n) return kNegInf;
  if (k == 0 || k == n) return 0.0;
  return log_gamma(n + 1) - log_gamma(k + 1) - log_gamma(n - k + 1);
}

double log_multiset(double n, double k) {
  if (k == 0) return 0.0;
  if (n <= 0) return kNegInf;
  return log_binom(n + k - 1, k);
}

double log_multiset_logn(double log_n, std::int64_t k) {
  if (k == 0) return 0.0;
  if (log_n < 30.0) return log_multiset(std::exp(log_n), static_cast<double>(k));
  // n >= 1e13: sum_{i<k} log(n + i) - log k!, evaluated without forming n.
  const double n = std::exp(log_n);
  double s = static_cast<double>(k) * log_n;
  if (static_cast<double>(k) * static_cast<double>(k) > n * 1e-16) {
    for (std::int64_t i = 1; i < k; ++i) s += std::log1p(static_cast<double>(i) / n);
  }
  return s - log_factorial(k);
}

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace topicblocks
