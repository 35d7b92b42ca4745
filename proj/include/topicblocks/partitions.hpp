#pragma once

#include <cstdint>

#include <boost/multiprecision/cpp_int.hpp>

namespace topicblocks {

using BigInt = boost::multiprecision::cpp_int;

/// Number of partitions of m into exactly n positive parts, from the
/// recurrence p(m, n) = p(m - n, n) + p(m - 1, n - 1), p(0, 0) = 1.
/// Exact, memoized (thread-safe).
BigInt count_partitions(int m, int n);

/// log p(m, n); -inf when p(m, n) = 0. Uses the table of q(k, j) (partitions
/// of k into at most j parts) for k up to the threshold and the asymptotic
/// approximation above it.
double log_count_partitions(std::int64_t m, std::int64_t n);

/// log q(k, j) from the table/asymptotic combination.
double log_q(std::int64_t k, std::int64_t j);

/// Asymptotic log q(k, j), valid for large k.
double log_q_asymptotic(std::int64_t k, std::int64_t j);

/// Largest k served from the table. Fixed at first use of log_q.
std::int64_t partition_table_threshold();

/// Dilogarithm Li2(x) for x <= 1.
double dilog(double x);

}  // namespace topicblocks
