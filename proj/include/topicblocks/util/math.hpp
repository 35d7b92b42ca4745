#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace topicblocks {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Reentrant log|Γ(x)|.
double log_gamma(double x);

/// log(n!). Small arguments come from a table built once on first use.
double log_factorial(std::int64_t n);

/// log(n!!) for even n, with n!! = 2^{n/2} (n/2)!.
double log_double_factorial_even(std::int64_t n);

/// log C(n, k) for real arguments; -inf outside the support.
double log_binom(double n, double k);

/// log of the multiset coefficient ((n k)) = C(n + k - 1, k).
double log_multiset(double n, double k);

/// Same as log_multiset but with log(n) as input, for bins counts that do
/// not fit in a double (e.g. C(B, q) with large B).
double log_multiset_logn(double log_n, std::int64_t k);

double log_sum_exp(double a, double b);
double log_sum_exp(std::span<const double> xs);

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Deterministic chunked reduction. Chunk boundaries do not depend on the
/// thread count, so the result is bit-identical for any OMP_NUM_THREADS.
template <class F>
double chunked_sum(std::size_t n, F&& term, bool parallel, std::size_t chunk = 4096) {
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(n_chunks, 0.0);
#pragma omp parallel for schedule(static) if (parallel && n_chunks > 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(c)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace topicblocks
