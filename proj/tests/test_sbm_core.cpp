#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "topicblocks/sbm_core.hpp"
#include "topicblocks/util/error.hpp"

using namespace topicblocks;

namespace {

double microcanonical_sum(const LabeledMultigraph& m, double wbar) {
  const auto c = derive_counts(m);
  return logp_graph_given_ke(m, c) + logp_k_flat(c, m.N) + logp_e_geometric(c.e, c.B, wbar);
}

std::vector<std::vector<int>> nonempty_subsets(int B, int Q) {
  std::vector<std::vector<int>> out;
  for (int mask = 1; mask < (1 << B); ++mask) {
    std::vector<int> s;
    for (int r = 0; r < B; ++r)
      if (mask & (1 << r)) s.push_back(r);
    if (static_cast<int>(s.size()) <= Q) out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_SUITE("sbm_core") {
  TEST_CASE("labeled graph probability examples") {
    LabeledMultigraph one{2, 2, {{0, 1, 0, 1, 1}}};
    CHECK(logp_graph_given_ke(one, derive_counts(one)) == doctest::Approx(0.0));
    LabeledMultigraph star{3, 1, {{0, 1, 0, 0, 1}, {0, 2, 0, 0, 1}}};
    CHECK(std::exp(logp_graph_given_ke(star, derive_counts(star))) == doctest::Approx(2.0 / 3));
  }

  TEST_CASE("labeled graph probability matches stub pairing enumeration") {
    Rng rng = make_rng(31, "pairing");
    for (int rep = 0; rep < 60; ++rep) {
      auto m = oracle::random_multigraph(rng, 4, 6, 3);
      const double p = std::exp(logp_graph_given_ke(m, derive_counts(m)));
      CHECK(p == doctest::Approx(oracle::pairing_probability(m)).epsilon(1e-12));
    }
  }

  TEST_CASE("flat degree prior") {
    LabeledMultigraph loop{1, 1, {{0, 0, 0, 0, 1}}};  // e_1 = 2
    CHECK(std::exp(logp_k_flat(derive_counts(loop), 2)) == doctest::Approx(1.0 / 3));
    LabeledMultigraph two{1, 1, {{0, 0, 0, 0, 2}}};  // e_1 = 4
    CHECK(std::exp(logp_k_flat(derive_counts(two), 3)) == doctest::Approx(1.0 / 15));
    LabeledMultigraph none{3, 2, {}};
    CHECK(logp_k_flat(derive_counts(none), 3) == 0.0);
  }

  TEST_CASE("geometric edge prior") {
    std::vector<std::int64_t> e1{6};  // one group, three internal edges
    CHECK(std::exp(logp_e_geometric(e1, 1, 1.0)) == doctest::Approx(1.0 / 16));
    std::vector<std::int64_t> e0(4, 0);
    CHECK(std::exp(logp_e_geometric(e0, 2, 1.0)) == doctest::Approx(1.0 / 8));
    // per-entry normalization: head sum plus analytic tail
    for (double wbar : {0.3, 1.0, 4.0}) {
      const int cutoff = 40;
      double head = 0;
      for (int a = 0; a <= cutoff; ++a)
        for (int b = 0; b <= cutoff; ++b)
          for (int c = 0; c <= cutoff; ++c) {
            std::vector<std::int64_t> e{2 * a, b, b, 2 * c};
            head += std::exp(logp_e_geometric(e, 2, wbar));
          }
      const double t = std::pow(wbar / (wbar + 1), cutoff + 1);
      CHECK(head == doctest::Approx(std::pow(1 - t, 3)).epsilon(1e-10));
    }
  }

  TEST_CASE("closed-form marginal equals the microcanonical product") {
    Rng rng = make_rng(41, "identity");
    for (int rep = 0; rep < 100; ++rep) {
      auto m = oracle::random_multigraph(rng, 6, 8, 3);
      const double wbar = 0.2 + 3 * uniform01(rng);
      CHECK(std::abs(logp_marginal_flat(m, wbar) - microcanonical_sum(m, wbar)) < 1e-9);
    }
  }

  TEST_CASE("closed-form marginal hand values") {
    LabeledMultigraph one{2, 2, {{0, 1, 0, 1, 1}}};
    CHECK(std::exp(logp_marginal_flat(one, 1.0)) == doctest::Approx(1.0 / 64));
    LabeledMultigraph empty{4, 3, {}};
    CHECK(logp_marginal_flat(empty, 2.0) == doctest::Approx(-6 * std::log(3.0)));
  }

  TEST_CASE("overlapping partition prior") {
    OverlappingPartition a{1, 1, 1, {{{0}, 1}}};
    CHECK(logp_overlap_partition(a) == doctest::Approx(0.0));
    OverlappingPartition b{2, 1, 0, {{{0}, 2}}};
    CHECK(logp_overlap_partition(b) == doctest::Approx(0.0));
    OverlappingPartition too_big{1, 2, 1, {{{0, 1}, 1}}};
    CHECK_THROWS_AS(logp_overlap_partition(too_big), InvalidInput);
  }

  TEST_CASE("overlapping partition prior sums to one") {
    for (int N = 1; N <= 3; ++N)
      for (int B = 1; B <= 2; ++B)
        for (int Q = 1; Q <= 2; ++Q) {
          const auto subsets = nonempty_subsets(B, Q);
          double total = 0;
          std::vector<std::size_t> pick(static_cast<std::size_t>(N), 0);
          std::function<void(int)> rec = [&](int i) {
            if (i == N) {
              OverlappingPartition op{N, B, Q, {}};
              for (auto p : pick) ++op.mixtures[subsets[p]];
              total += std::exp(logp_overlap_partition(op));
              return;
            }
            for (std::size_t p = 0; p < subsets.size(); ++p) {
              pick[static_cast<std::size_t>(i)] = p;
              rec(i + 1);
            }
          };
          rec(0);
          CAPTURE(N);
          CAPTURE(B);
          CAPTURE(Q);
          CHECK(std::abs(total - 1.0) < 1e-9);
        }
  }

  TEST_CASE("degree prior examples") {
    MixtureDegrees ones{{0}, {{1, 1, 1}}};
    // single integer partition, single arrangement
    CHECK(mixture_degree_term(ones) == doctest::Approx(0.0));
    MixtureDegrees two{{0}, {{2, 1}}};
    CHECK(std::exp(mixture_degree_term(two)) == doctest::Approx(0.5));
  }

  TEST_CASE("degree prior given mixtures sums to one") {
    // Fixed mixtures per node, fixed e_r; enumerate every labeled degree sequence.
    struct Case {
      std::vector<std::vector<int>> mix;
      std::vector<std::int64_t> e;
    };
    std::vector<Case> cases{
        {{{0}, {0}, {0}}, {5}},
        {{{0}, {0, 1}, {1}}, {4, 5}},
        {{{0, 1}, {0, 1}}, {3, 4}},
        {{{0}, {1}, {0, 1}}, {5, 3}},
        {{{0}, {0}, {0, 1}, {1}}, {5, 4}},
    };
    for (const auto& cs : cases) {
      const int B = static_cast<int>(cs.e.size());
      std::vector<std::vector<std::vector<std::int64_t>>> per_group(static_cast<std::size_t>(B));
      std::vector<std::vector<std::size_t>> holders(static_cast<std::size_t>(B));
      for (std::size_t i = 0; i < cs.mix.size(); ++i)
        for (int r : cs.mix[i]) holders[static_cast<std::size_t>(r)].push_back(i);
      for (int r = 0; r < B; ++r)
        per_group[static_cast<std::size_t>(r)] =
            oracle::compositions(cs.e[static_cast<std::size_t>(r)],
                                 static_cast<int>(holders[static_cast<std::size_t>(r)].size()), 1);
      double total = 0;
      std::function<void(int, std::vector<std::vector<std::pair<int, std::int64_t>>>&)> rec =
          [&](int r, std::vector<std::vector<std::pair<int, std::int64_t>>>& k) {
            if (r == B) {
              total += std::exp(logp_k_given_eb(k));
              return;
            }
            for (const auto& comp : per_group[static_cast<std::size_t>(r)]) {
              auto k2 = k;
              for (std::size_t h = 0; h < comp.size(); ++h)
                k2[holders[static_cast<std::size_t>(r)][h]].push_back({r, comp[h]});
              rec(r + 1, k2);
            }
          };
      std::vector<std::vector<std::pair<int, std::int64_t>>> k(cs.mix.size());
      rec(0, k);
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }

  TEST_CASE("hierarchy partition prior") {
    CHECK(std::exp(level_partition_side({2})) == doctest::Approx(0.5));
    CHECK(level_partition_side({1}) == doctest::Approx(0.0));
    // sums to one over all labeled assignments of 3 items:
    // 1 with B = 1, 6 with B = 2, 6 with B = 3
    const double total = std::exp(level_partition_side({3})) + 6 * std::exp(level_partition_side({2, 1})) +
                         6 * std::exp(level_partition_side({1, 1, 1}));
    CHECK(total == doctest::Approx(1.0));
  }

  TEST_CASE("bipartite partition prior") {
    LevelCounts child{4, {Side::Doc, Side::Doc, Side::Word, Side::Word}, std::vector<std::int64_t>(16, 0), {0, 0, 1, 1}};
    CHECK(logp_bipartite_partition(child, 2) == doctest::Approx(2 * level_partition_side({2})));
    LevelCounts mixed = child;
    mixed.parent = {0, 1, 1, 1};
    std::string diag;
    CHECK(logp_bipartite_partition(mixed, 2, &diag) == kNegInf);
    CHECK(!diag.empty());
    LevelCounts c3{5, {Side::Doc, Side::Doc, Side::Doc, Side::Word, Side::Word},
                   std::vector<std::int64_t>(25, 0), {0, 1, 0, 2, 3}};
    CHECK(logp_bipartite_partition(c3, 4) ==
          doctest::Approx(level_partition_side({2, 1}) + level_partition_side({1, 1})));
  }

  TEST_CASE("nested aggregation is checked") {
    // two doc groups, two word groups, merged pairwise at level 2
    std::vector<std::int64_t> e1{0, 0, 3, 1, 0, 0, 2, 4, 3, 2, 0, 0, 1, 4, 0, 0};
    Hierarchy h{{{0, 0, 1, 1}}};
    auto levels = build_levels(4, {Side::Doc, Side::Doc, Side::Word, Side::Word}, e1, h);
    REQUIRE(levels.size() == 2);
    CHECK(levels[1].e == std::vector<std::int64_t>{0, 10, 10, 0});
    const double lp = logp_hierarchy(levels);
    // edges of level 2 spread over 2 x 2 child pairs, plus two merges and the top prior
    const double expect = -log_multiset(4, 10) + 2 * std::log(0.5) + logp_e_geometric({0, 10, 10, 0}, 2, 10.0 / 3);
    CHECK(lp == doctest::Approx(expect));
    levels[1].e[1] = 9;
    CHECK_THROWS_AS(logp_hierarchy(levels), IntegrityError);
    Hierarchy bad{{{0, 1, 1, 1}}};
    CHECK_THROWS_AS(build_levels(4, {Side::Doc, Side::Doc, Side::Word, Side::Word}, e1, bad), IntegrityError);
  }

  TEST_CASE("joint score on a toy graph is the sum of its parts") {
    auto g = make_graph(2, 2, {{0, 0, 1}, {1, 1, 1}});
    LabeledState s{2, {Side::Doc, Side::Word}, {{0, 0, 0, 1, 1}, {1, 1, 0, 1, 1}}};
    auto sc = joint_logp(g, s, Hierarchy{});
    CHECK(sc.sigma == doctest::Approx(sc.breakdown_sum()));
    const auto m = to_multigraph(g, s);
    const auto c = derive_counts(m);
    // P(𝒜|k,e) = 1/2: two of the four... pairings; degrees 1,1 per side
    const double adj = logp_graph_given_ke(m, c);
    CHECK(std::exp(adj) == doctest::Approx(0.5));
    const double deg = 2 * logp_k_given_eb({{{0, 1}}, {{0, 1}}});
    const double part = 2 * logp_overlap_partition(OverlappingPartition{2, 1, 0, {{{0}, 2}}});
    const double top = logp_e_geometric(c.e, 2, 2.0 * 2 / 6);
    CHECK(-sc.sigma == doctest::Approx(adj + deg + part + top));
  }

  TEST_CASE("joint score is invariant under group relabeling within a side") {
    auto g = make_graph(3, 3, {{0, 0, 2}, {0, 1, 1}, {1, 1, 3}, {2, 2, 2}, {2, 0, 1}});
    LabeledState s{5, {Side::Doc, Side::Doc, Side::Word, Side::Word, Side::Word},
                   {{0, 0, 0, 2, 2}, {0, 1, 0, 3, 1}, {1, 1, 1, 3, 3}, {2, 2, 1, 4, 2}, {2, 0, 1, 2, 1}}};
    Hierarchy h{{{0, 0, 1, 2, 2}}};
    const double a = joint_logp(g, s, h).sigma;
    LabeledState t = s;
    for (auto& b : t.bundles) {
      b.rd = 1 - b.rd;
      b.rw = b.rw == 2 ? 4 : (b.rw == 4 ? 2 : 3);
    }
    Hierarchy th{{{0, 0, 2, 2, 1}}};
    CHECK(joint_logp(g, t, th).sigma == doctest::Approx(a).epsilon(1e-12));
    // empty groups are ignored
    LabeledState u = s;
    u.B = 6;
    u.side_of_group.push_back(Side::Word);
    Hierarchy uh{{{0, 0, 1, 2, 2, 2}}};
    CHECK(joint_logp(g, u, uh).sigma == doctest::Approx(a).epsilon(1e-12));
  }

  TEST_CASE("overlap bound is enforced") {
    auto g = make_graph(1, 1, {{0, 0, 2}});
    LabeledState s{3, {Side::Doc, Side::Word, Side::Word}, {{0, 0, 0, 1, 1}, {0, 0, 0, 2, 1}}};
    CHECK_NOTHROW(joint_logp(g, s, Hierarchy{}, JointOptions{2}));
    CHECK_THROWS_AS(joint_logp(g, s, Hierarchy{}, JointOptions{1}), InvalidInput);
  }

  TEST_CASE("empty graph") {
    auto g = make_graph(2, 2, {});
    LabeledState s{2, {Side::Doc, Side::Word}, {}};
    CHECK(joint_logp(g, s, Hierarchy{}).sigma == 0.0);
  }
}
