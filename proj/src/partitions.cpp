#include "topicblocks/partitions.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <vector>

#include "topicblocks/util/math.hpp"

namespace topicblocks {

namespace {

constexpr std::int64_t kThreshold = 2000;

struct BigTable {
  std::mutex mu;
  // rows[m][n] = p(m, n) for n <= m
  std::vector<std::vector<BigInt>> rows;
};

BigTable& big_table() {
  static BigTable t;
  return t;
}

// q(k, j) for 0 <= j <= k <= kThreshold, stored as a triangle.
const std::vector<double>& log_q_table() {
  static const std::vector<double> table = [] {
    const std::size_t T = kThreshold;
    std::vector<double> q((T + 1) * (T + 2) / 2, 0.0);
    auto at = [](std::size_t k, std::size_t j) -> std::size_t { return k * (k + 1) / 2 + j; };
    // q(k, j) = q(k, j - 1) + q(k - j, min(j, k - j)), plain doubles are
    // enough since q(2000, 2000) ~ 1e47.
    for (std::size_t k = 0; k <= T; ++k) {
      q[at(k, 0)] = k == 0 ? 1.0 : 0.0;
      for (std::size_t j = 1; j <= k; ++j) {
        const std::size_t rest = k - j;
        q[at(k, j)] = q[at(k, j - 1)] + q[at(rest, std::min(j, rest))];
      }
    }
    for (double& x : q) x = x > 0 ? std::log(x) : kNegInf;
    return q;
  }();
  return table;
}

}  // namespace

BigInt count_partitions(int m, int n) {
  if (n < 0 || m < 0) return 0;
  if (m == 0 && n == 0) return 1;
  if (n == 0 || n > m) return 0;
  auto& t = big_table();
  std::lock_guard lock(t.mu);
  for (int mm = static_cast<int>(t.rows.size()); mm <= m; ++mm) {
    std::vector<BigInt> row(static_cast<std::size_t>(mm) + 1, 0);
    if (mm == 0) row[0] = 1;
    for (int nn = 1; nn <= mm; ++nn) {
      BigInt v = 0;
      const int a = mm - nn;
      if (nn <= a) v += t.rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(nn)];
      if (nn - 1 <= mm - 1) v += t.rows[static_cast<std::size_t>(mm - 1)][static_cast<std::size_t>(nn - 1)];
      row[static_cast<std::size_t>(nn)] = v;
    }
    t.rows.push_back(std::move(row));
  }
  return t.rows[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)];
}

std::int64_t partition_table_threshold() { return kThreshold; }

double dilog(double x) {
  if (x == 0.0) return 0.0;
  if (x == 1.0) return std::numbers::pi * std::numbers::pi / 6.0;
  if (x > 0.5) {
    return std::numbers::pi * std::numbers::pi / 6.0 - std::log(x) * std::log1p(-x) - dilog(1.0 - x);
  }
  if (x < -1.0) {
    // Li2(x) = -pi^2/6 - log(-x)^2/2 - Li2(1/x)
    const double l = std::log(-x);
    return -std::numbers::pi * std::numbers::pi / 6.0 - 0.5 * l * l - dilog(1.0 / x);
  }
  if (x < -0.5) {
    // Li2(x) = Li2(x^2)/2 - Li2(-x)
    return 0.5 * dilog(x * x) - dilog(-x);
  }
  double term = x, sum = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double add = term / (static_cast<double>(k) * k);
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    term *= x;
  }
  return sum;
}

double log_q_asymptotic(std::int64_t k, std::int64_t j) {
  if (k == 0) return 0.0;
  if (j <= 0) return kNegInf;
  if (j > k) j = k;
  if (j == 1) return 0.0;
  const double n = static_cast<double>(k);
  const double jd = static_cast<double>(j);
  if (j == 2) return std::log(std::floor(n / 2.0) + 1.0);
  if (jd < std::pow(n, 0.25)) {
    return log_binom(n + jd - 1.0, jd - 1.0) - log_factorial(j);
  }
  const double u = jd / std::sqrt(n);
  // v = u sqrt(Li2(1 - e^{-v})), solved by bisection.
  double lo = 1e-12, hi = u * std::numbers::pi / std::sqrt(6.0) + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = mid - u * std::sqrt(dilog(-std::expm1(-mid)));
    if (h > 0)
      hi = mid;
    else
      lo = mid;
    if (hi - lo < 1e-14 * hi) break;
  }
  const double v = 0.5 * (lo + hi);
  const double ev = std::exp(-v);
  const double log_f = std::log(v) - 1.5 * std::log(2.0) - std::log(std::numbers::pi) - std::log(u) -
                       0.5 * std::log1p(-(1.0 + u * u / 2.0) * ev);
  const double g = 2.0 * v / u - u * std::log1p(-ev);
  return log_f - std::log(n) + std::sqrt(n) * g;
}

double log_q(std::int64_t k, std::int64_t j) {
  if (k < 0 || j < 0) return kNegInf;
  if (k == 0) return 0.0;
  if (j == 0) return kNegInf;
  if (j > k) j = k;
  if (k <= kThreshold) {
    const auto ku = static_cast<std::size_t>(k), ju = static_cast<std::size_t>(j);
    return log_q_table()[ku * (ku + 1) / 2 + ju];
  }
  return log_q_asymptotic(k, j);
}

double log_count_partitions(std::int64_t m, std::int64_t n) {
  if (m == 0 && n == 0) return 0.0;
  if (n <= 0 || m < n) return kNegInf;
  return log_q(m - n, n);
}

}  // namespace topicblocks
