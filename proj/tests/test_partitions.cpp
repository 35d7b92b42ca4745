#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "topicblocks/partitions.hpp"

using namespace topicblocks;

TEST_SUITE("partitions") {
  TEST_CASE("spot values") {
    CHECK(count_partitions(0, 0) == 1);
    CHECK(count_partitions(4, 2) == 2);
    CHECK(count_partitions(7, 3) == 4);
    CHECK(count_partitions(5, 0) == 0);
    CHECK(count_partitions(3, 4) == 0);
  }

  TEST_CASE("recurrence matches enumeration up to 30") {
    for (int m = 0; m <= 30; ++m)
      for (int n = 0; n <= m; ++n) {
        CAPTURE(m);
        CAPTURE(n);
        CHECK(count_partitions(m, n) == oracle::enumerate_partitions(m, n));
      }
  }

  TEST_CASE("log table agrees with exact integers") {
    for (int m = 1; m <= 120; m += 7)
      for (int n = 1; n <= m; n += 3) {
        const BigInt p = count_partitions(m, n);
        const double exact = std::log(p.convert_to<double>());
        CHECK(log_count_partitions(m, n) == doctest::Approx(exact).epsilon(1e-12));
      }
    CHECK(log_count_partitions(0, 0) == 0.0);
    CHECK(log_count_partitions(3, 5) == kNegInf);
  }

  TEST_CASE("asymptotic branch is close to the table at the threshold") {
    const auto T = partition_table_threshold();
    for (std::int64_t j : {2, 3, 5, 10, 40, 100, 300, 1000, 2000}) {
      CAPTURE(j);
      const double exact = log_q(T, j);
      const double approx = log_q_asymptotic(T, j);
      CHECK(std::abs(approx - exact) < 0.05);
      CHECK(std::abs(approx - exact) < 1e-3 * exact);
    }
  }

  TEST_CASE("values above the threshold stay finite and monotone") {
    const auto T = partition_table_threshold();
    double prev = -1;
    for (std::int64_t j = 1; j < 5000; j += 37) {
      const double v = log_q(10 * T, j);
      CHECK(std::isfinite(v));
      CHECK(v >= prev - 1e-9);
      prev = v;
    }
  }
}
