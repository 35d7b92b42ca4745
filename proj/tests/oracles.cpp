#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <tuple>

#include "topicblocks/util/math.hpp"

namespace oracle {

LabeledMultigraph random_multigraph(Rng& rng, int max_n, int max_e, int max_b) {
  LabeledMultigraph m;
  m.N = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_n)));
  m.B = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_b)));
  const int E = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_e) + 1));
  for (int t = 0; t < E; ++t) {
    HalfEdgeBundle b;
    b.i = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m.N)));
    b.j = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m.N)));
    b.r = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m.B)));
    b.s = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m.B)));
    b.count = 1;
    m.bundles.push_back(b);
  }
  return m;
}

namespace {

using Key = std::tuple<int, int, int, int>;

std::map<Key, std::int64_t> entries_of_pairs(const std::vector<std::pair<int, int>>& stubs,
                                             const std::vector<int>& mate) {
  std::map<Key, std::int64_t> out;
  for (std::size_t a = 0; a < stubs.size(); ++a) {
    const auto b = static_cast<std::size_t>(mate[a]);
    if (b < a) continue;
    auto [i, r] = stubs[a];
    auto [j, s] = stubs[b];
    if (i > j || (i == j && r > s)) {
      std::swap(i, j);
      std::swap(r, s);
    }
    ++out[{i, j, r, s}];
  }
  return out;
}

std::map<std::pair<int, int>, std::int64_t> label_pairs(const std::map<Key, std::int64_t>& ent) {
  std::map<std::pair<int, int>, std::int64_t> out;
  for (const auto& [k, c] : ent) {
    const int r = std::get<2>(k), s = std::get<3>(k);
    out[{std::min(r, s), std::max(r, s)}] += c;
  }
  return out;
}

}  // namespace

double pairing_probability(const LabeledMultigraph& m) {
  std::vector<std::pair<int, int>> stubs;
  std::map<Key, std::int64_t> target;
  for (const auto& b : canonical_entries(m)) {
    for (std::int64_t t = 0; t < b.count; ++t) {
      stubs.emplace_back(b.i, b.r);
      stubs.emplace_back(b.j, b.s);
    }
    target[{b.i, b.j, b.r, b.s}] += b.count;
  }
  const auto target_e = label_pairs(target);
  std::vector<int> mate(stubs.size(), -1);
  std::int64_t compatible = 0, hits = 0;
  std::function<void()> rec = [&]() {
    std::size_t a = 0;
    while (a < stubs.size() && mate[a] >= 0) ++a;
    if (a == stubs.size()) {
      const auto ent = entries_of_pairs(stubs, mate);
      if (label_pairs(ent) != target_e) return;
      ++compatible;
      if (ent == target) ++hits;
      return;
    }
    for (std::size_t b = a + 1; b < stubs.size(); ++b) {
      if (mate[b] >= 0) continue;
      mate[a] = static_cast<int>(b);
      mate[b] = static_cast<int>(a);
      rec();
      mate[a] = mate[b] = -1;
    }
  };
  rec();
  if (stubs.empty()) return 1.0;
  return static_cast<double>(hits) / static_cast<double>(compatible);
}

double poisson_sbm_literal(const LabeledMultigraph& m, const MixedMembershipParams& p) {
  std::map<Key, std::int64_t> a;
  for (const auto& b : canonical_entries(m)) a[{b.i, b.j, b.r, b.s}] += b.count;
  auto count = [&](int i, int j, int r, int s) {
    auto it = a.find({i, j, r, s});
    return it == a.end() ? std::int64_t{0} : it->second;
  };
  auto pois = [](std::int64_t n, double mean) {
    if (mean == 0) return n == 0 ? 0.0 : kNegInf;
    return static_cast<double>(n) * std::log(mean) - mean - std::lgamma(static_cast<double>(n) + 1);
  };
  double lp = 0.0;
  for (int i = 0; i < m.N; ++i)
    for (int j = i + 1; j < m.N; ++j)
      for (int r = 0; r < m.B; ++r)
        for (int s = 0; s < m.B; ++s)
          lp += pois(count(i, j, r, s),
                     p.kappa(static_cast<std::size_t>(i), static_cast<std::size_t>(r)) *
                         p.omega(static_cast<std::size_t>(r), static_cast<std::size_t>(s)) *
                         p.kappa(static_cast<std::size_t>(j), static_cast<std::size_t>(s)));
  for (int i = 0; i < m.N; ++i)
    for (int r = 0; r < m.B; ++r)
      for (int s = r; s < m.B; ++s) {
        double mean = p.kappa(static_cast<std::size_t>(i), static_cast<std::size_t>(r)) *
                      p.omega(static_cast<std::size_t>(r), static_cast<std::size_t>(s)) *
                      p.kappa(static_cast<std::size_t>(i), static_cast<std::size_t>(s));
        if (r == s) mean /= 2;
        lp += pois(count(i, i, r, s), mean);
      }
  return lp;
}

std::int64_t enumerate_partitions(int m, int n) {
  // nonincreasing sequences of n positive parts summing to m
  std::function<std::int64_t(int, int, int)> rec = [&](int left, int parts, int maxpart) -> std::int64_t {
    if (parts == 0) return left == 0 ? 1 : 0;
    std::int64_t c = 0;
    for (int x = std::min(left, maxpart); x >= 1; --x) c += rec(left - x, parts - 1, x);
    return c;
  };
  return rec(m, n, m);
}

McEstimate lda_marginal_mc(const std::vector<TopicCount>& labels, const DirichletHyper& hyper,
                           const std::vector<double>& eta_d, std::int64_t draws, std::uint64_t seed,
                           bool parallel) {
  const std::size_t D = hyper.D(), K = hyper.K(), V = hyper.V();
  const auto agg = aggregate_labels(labels);
  std::vector<double> kd(D, 0.0);
  double log_const = 0.0;
  for (const auto& t : agg) {
    kd[static_cast<std::size_t>(t.d)] += static_cast<double>(t.count);
    log_const -= log_factorial(t.count);
  }
  for (std::size_t d = 0; d < D; ++d) {
    if (kd[d] > 0) log_const += kd[d] * std::log(eta_d[d]);
    log_const -= eta_d[d];
  }
  constexpr std::int64_t kChunk = 1 << 14;
  const std::int64_t n_chunks = (draws + kChunk - 1) / kChunk;
  std::vector<double> s1(static_cast<std::size_t>(n_chunks)), s2(static_cast<std::size_t>(n_chunks));
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    Rng rng = make_rng(seed, "lda-mc", static_cast<std::uint64_t>(c));
    double a1 = 0, a2 = 0;
    const std::int64_t hi = std::min(draws, (c + 1) * kChunk);
    Matrix theta(D, K), phi(K, V);
    for (std::int64_t t = c * kChunk; t < hi; ++t) {
      for (std::size_t d = 0; d < D; ++d) {
        const auto x = dirichlet(rng, hyper.alpha.row(d));
        std::copy(x.begin(), x.end(), theta.row(d).begin());
      }
      for (std::size_t r = 0; r < K; ++r) {
        const auto x = dirichlet(rng, hyper.beta.row(r));
        std::copy(x.begin(), x.end(), phi.row(r).begin());
      }
      double lp = log_const;
      for (const auto& l : agg)
        lp += static_cast<double>(l.count) *
              std::log(phi(static_cast<std::size_t>(l.r), static_cast<std::size_t>(l.w)) *
                       theta(static_cast<std::size_t>(l.d), static_cast<std::size_t>(l.r)));
      const double v = std::exp(lp);
      a1 += v;
      a2 += v * v;
    }
    s1[static_cast<std::size_t>(c)] = a1;
    s2[static_cast<std::size_t>(c)] = a2;
  }
  double t1 = 0, t2 = 0;
  for (std::size_t c = 0; c < s1.size(); ++c) {
    t1 += s1[c];
    t2 += s2[c];
  }
  const double n = static_cast<double>(draws);
  const double mean = t1 / n;
  const double var = std::max(0.0, t2 / n - mean * mean) * n / (n - 1);
  return {mean, std::sqrt(var / n)};
}

std::vector<std::vector<std::int64_t>> compositions(std::int64_t total, int parts, std::int64_t min_part) {
  std::vector<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> cur;
  std::function<void(std::int64_t, int)> rec = [&](std::int64_t left, int k) {
    if (k == 1) {
      if (left >= min_part) {
        cur.push_back(left);
        out.push_back(cur);
        cur.pop_back();
      }
      return;
    }
    for (std::int64_t x = min_part; x <= left - min_part * (k - 1); ++x) {
      cur.push_back(x);
      rec(left - x, k - 1);
      cur.pop_back();
    }
  };
  if (parts == 0) {
    if (total == 0) out.emplace_back();
    return out;
  }
  rec(total, parts);
  return out;
}

double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> nij;
  std::map<int, double> ai, bj;
  for (std::size_t i = 0; i < a.size(); ++i) {
    nij[{a[i], b[i]}] += 1;
    ai[a[i]] += 1;
    bj[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sij = 0, sa = 0, sb = 0;
  for (const auto& kv : nij) sij += c2(kv.second);
  for (const auto& kv : ai) sa += c2(kv.second);
  for (const auto& kv : bj) sb += c2(kv.second);
  const double n2 = c2(static_cast<double>(a.size()));
  const double expected = sa * sb / n2;
  const double maxi = (sa + sb) / 2;
  if (maxi == expected) return 1.0;
  return (sij - expected) / (maxi - expected);
}

}  // namespace oracle
