#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "topicblocks/partitions.hpp"
#include "topicblocks/util/math.hpp"
#include "topicblocks/util/rng.hpp"

using namespace topicblocks;

TEST_SUITE("util") {
  TEST_CASE("log factorial and binomials") {
    CHECK(log_factorial(0) == 0.0);
    CHECK(log_factorial(5) == doctest::Approx(std::log(120.0)));
    CHECK(log_factorial(3'000'000) == doctest::Approx(std::lgamma(3'000'001.0)));
    CHECK(log_double_factorial_even(6) == doctest::Approx(std::log(48.0)));
    CHECK(log_binom(6, 4) == doctest::Approx(std::log(15.0)));
    CHECK(log_multiset(3, 4) == doctest::Approx(std::log(15.0)));
    CHECK(log_multiset(5, 0) == 0.0);
    CHECK(log_binom(2, 3) == kNegInf);
  }

  TEST_CASE("multiset with log-sized bin count") {
    const double n = 1e15;
    // ((n 3)) = n (n + 1) (n + 2) / 6
    const double expect = std::log(n) + std::log1p(1 / n) + std::log(n) + std::log1p(2 / n) +
                          std::log(n) - std::log(6.0);
    CHECK(log_multiset_logn(std::log(n), 3) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(log_multiset_logn(std::log(7.0), 2) == doctest::Approx(std::log(28.0)));
  }

  TEST_CASE("chunked sum is independent of parallelism") {
    auto f = [](std::size_t i) { return 1.0 / static_cast<double>(i + 1); };
    const double a = chunked_sum(100000, f, false, 1000);
    const double b = chunked_sum(100000, f, true, 1000);
    CHECK(a == b);
  }

  TEST_CASE("substreams are distinct and reproducible") {
    CHECK(substream_seed(1, "a", 0) == substream_seed(1, "a", 0));
    CHECK(substream_seed(1, "a", 0) != substream_seed(1, "a", 1));
    CHECK(substream_seed(1, "a", 0) != substream_seed(1, "b", 0));
    CHECK(substream_seed(1, "a", 0) != substream_seed(2, "a", 0));
  }

  TEST_CASE("gamma and dirichlet moments") {
    Rng rng = make_rng(3, "moments");
    for (double a : {0.01, 0.5, 1.0, 7.5}) {
      double s = 0;
      const int n = 200000;
      for (int i = 0; i < n; ++i) s += std::exp(log_gamma_variate(rng, a));
      const double sd = std::sqrt(a / n);
      CHECK(std::abs(s / n - a) < 5 * sd);
    }
    std::vector<double> alpha{1.0, 2.0, 3.0};
    std::vector<double> m(3, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      auto x = dirichlet(rng, alpha);
      for (int r = 0; r < 3; ++r) m[static_cast<std::size_t>(r)] += x[static_cast<std::size_t>(r)] / n;
    }
    for (int r = 0; r < 3; ++r) CHECK(m[static_cast<std::size_t>(r)] == doctest::Approx((r + 1) / 6.0).epsilon(0.01));
    // tiny concentration still yields a normalized vector
    auto tiny = dirichlet(rng, std::vector<double>{1e-4, 1e-4, 1e-4});
    CHECK(tiny[0] + tiny[1] + tiny[2] == doctest::Approx(1.0));
  }

  TEST_CASE("poisson mean") {
    Rng rng = make_rng(5, "pois");
    for (double mean : {0.5, 12.0, 250.0}) {
      double s = 0;
      const int n = 100000;
      for (int i = 0; i < n; ++i) s += static_cast<double>(poisson(rng, mean));
      CHECK(std::abs(s / n - mean) < 5 * std::sqrt(mean / n));
    }
  }

  TEST_CASE("alias sampler frequencies") {
    std::vector<double> w{0.1, 0.0, 0.6, 0.3};
    AliasSampler a(w);
    Rng rng = make_rng(9, "alias");
    std::vector<double> c(4, 0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) c[a(rng)] += 1.0 / n;
    CHECK(c[1] == 0.0);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(c[static_cast<std::size_t>(i)] - w[static_cast<std::size_t>(i)]) < 0.005);
  }

  TEST_CASE("dilogarithm") {
    CHECK(dilog(0.5) == doctest::Approx(0.5822405264650125));
    CHECK(dilog(0.9) == doctest::Approx(1.2997147230049587));
    CHECK(dilog(-1.0) == doctest::Approx(-0.8224670334241132));
    CHECK(dilog(1.0) == doctest::Approx(1.6449340668482264));
  }
}
