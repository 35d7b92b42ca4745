#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "topicblocks/inference.hpp"
#include "topicblocks/util/error.hpp"

using namespace topicblocks;

namespace {

// docs 0..n-1 use words 0..n-1, docs n..2n-1 use words n..2n-1
BipartiteMultigraph two_cliques(int n, std::int64_t c) {
  std::vector<CountEntry> edges;
  for (int half = 0; half < 2; ++half)
    for (int d = 0; d < n; ++d)
      for (int w = 0; w < n; ++w) edges.push_back({half * n + d, half * n + w, c});
  return make_graph(2 * n, 2 * n, edges);
}

BipartiteMultigraph random_graph(Rng& rng, int D, int V, int n_edges, int max_count) {
  std::vector<CountEntry> edges;
  for (int k = 0; k < n_edges; ++k)
    edges.push_back({static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(D))),
                     static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(V))),
                     1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(max_count)))});
  return make_graph(D, V, edges);
}

// hard group of each node from a non-overlapping state
std::vector<int> node_labels(const BipartiteMultigraph& g, const LabeledState& s, Side side) {
  const int n = side == Side::Doc ? g.D : g.V;
  std::vector<int> lab(static_cast<std::size_t>(n), -1);
  for (const auto& b : s.bundles) {
    const int i = side == Side::Doc ? b.d : b.w;
    const int r = side == Side::Doc ? b.rd : b.rw;
    int& x = lab[static_cast<std::size_t>(i)];
    if (x >= 0 && x != r) return {};
    x = r;
  }
  return lab;
}

InferenceConfig quick(Mode m, std::uint64_t seed) {
  InferenceConfig c;
  c.mode = m;
  c.seed = seed;
  c.n_sweeps = 30;
  c.n_restarts = 2;
  c.window = 5;
  return c;
}

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("config validation") {
    InferenceConfig c;
    CHECK_NOTHROW(c.validate());
    c.temperatures = {1.0, 2.0};
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.n_restarts = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = {};
    c.n_sweeps = -1;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    CHECK(parse_mode("anneal") == Mode::Anneal);
    CHECK(parse_doc_clustering("fig2-mode") == DocClustering::PerDocGroup);
    CHECK_THROWS_AS(parse_mode("gibbs"), InvalidInput);
  }

  TEST_CASE("init_state") {
    const auto g = two_cliques(3, 2);
    InferenceConfig c;
    c.init_doc_groups = 1;
    c.init_word_groups = 1;
    Rng rng(1);
    auto s = init_state(g, c, rng);
    const auto dc = derive_counts(g, s);
    CHECK(s.B == 2);
    CHECK(dc.ers(0, 1) == g.E);

    c = {};
    c.doc_clustering = DocClustering::PerDocGroup;
    c.fixed_word_groups = 3;
    Rng r1(5), r2(5);
    const auto a = init_state(g, c, r1);
    const auto b = init_state(g, c, r2);
    CHECK(a.B == g.D + 3);
    CHECK(a.bundles == b.bundles);
    for (const auto& x : a.bundles) CHECK(x.rd == x.d);
  }

  TEST_CASE("greedy trace is nonincreasing and Δ-consistent") {
    Rng rng(11);
    for (int rep = 0; rep < 4; ++rep) {
      const auto g = random_graph(rng, 6, 8, 20, 3);
      auto c = quick(Mode::Greedy, 100 + static_cast<std::uint64_t>(rep));
      c.check_consistency = true;
      c.n_restarts = 1;
      const auto r = fit(g, c);
      REQUIRE(!r.trace.empty());
      for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] <= r.trace[k - 1]);
      CHECK(r.score.sigma == doctest::Approx(r.trace.back()).epsilon(1e-9));
      CHECK(r.score.sigma == doctest::Approx(*std::min_element(r.trace.begin(), r.trace.end())).epsilon(1e-9));
    }
  }

  TEST_CASE("anneal moves stay Δ-consistent with overlap and hierarchy") {
    Rng rng(12);
    const auto g = random_graph(rng, 8, 10, 30, 4);
    auto c = quick(Mode::Anneal, 3);
    c.check_consistency = true;
    c.n_restarts = 1;
    c.n_sweeps = 12;
    CHECK_NOTHROW(fit(g, c));
    c.Q = 2;
    CHECK_NOTHROW(fit(g, c));
  }

  TEST_CASE("greedy rejects Σ-increasing proposals") {
    const auto g = two_cliques(3, 2);
    InferenceConfig c;
    c.init_doc_groups = 2;
    c.init_word_groups = 2;
    LabeledState s;
    s.B = 4;
    s.side_of_group = {Side::Doc, Side::Doc, Side::Word, Side::Word};
    for (const auto& e : g.edges) s.bundles.push_back({e.doc, e.word, e.doc < 3 ? 0 : 1, e.word < 3 ? 2 : 3, e.count});
    BlockState st(g, s, {}, {});
    const double before = st.sigma();
    Rng rng(4);
    for (int k = 0; k < 3; ++k) {
      sweep(st, 0.0, rng, c);
      CHECK(st.sigma() <= before);
    }
  }

  TEST_CASE("planted two cliques are recovered") {
    const auto g = two_cliques(5, 3);
    auto c = quick(Mode::Anneal, 7);
    c.Q = 1;
    c.n_restarts = 10;
    const auto r = fit(g, c);
    CHECK(r.doc_groups == 2);
    CHECK(r.word_groups == 2);
    const auto dl = node_labels(g, r.state, Side::Doc);
    const auto wl = node_labels(g, r.state, Side::Word);
    REQUIRE(!dl.empty());
    REQUIRE(!wl.empty());
    std::vector<int> truth = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(oracle::adjusted_rand(dl, truth) == doctest::Approx(1.0));
    CHECK(oracle::adjusted_rand(wl, truth) == doctest::Approx(1.0));
  }

  TEST_CASE("restarts are deterministic and independent of threading") {
    Rng rng(21);
    const auto g = random_graph(rng, 10, 12, 40, 3);
    auto c = quick(Mode::Anneal, 9);
    c.n_restarts = 3;
    const auto a = fit(g, c);
    c.parallel = false;
    const auto b = fit(g, c);
    CHECK(a.score.sigma == b.score.sigma);
    CHECK(a.state.bundles == b.state.bundles);
    CHECK(a.restart_sigma == b.restart_sigma);
    const auto one = fit_single(g, c, static_cast<std::uint64_t>(a.best_restart));
    CHECK(one.score.sigma == a.score.sigma);
    CHECK(a.score.sigma == *std::min_element(a.restart_sigma.begin(), a.restart_sigma.end()));
  }

  TEST_CASE("empty graph gives the trivial model") {
    const auto g = make_graph(3, 4, {});
    auto c = quick(Mode::Greedy, 1);
    const auto r = fit(g, c);
    CHECK(r.doc_groups == 1);
    CHECK(r.word_groups == 1);
    CHECK(r.depth == 1);
    CHECK(std::isfinite(r.score.sigma));
  }

  TEST_CASE("MH over unit moves samples the exact posterior") {
    // 2 docs, 4 words, 4 units; 2 groups per side in the universe
    const auto g = make_graph(2, 4, {{0, 0, 1}, {0, 1, 1}, {1, 2, 1}, {1, 3, 1}, });
    const std::vector<int> du = {0, 1}, wu = {2, 3};
    auto state_of = [&](const std::vector<int>& lab) {
      LabeledState s;
      s.B = 4;
      s.side_of_group = {Side::Doc, Side::Doc, Side::Word, Side::Word};
      for (std::size_t e = 0; e < g.edges.size(); ++e)
        s.bundles.push_back({g.edges[e].doc, g.edges[e].word, lab[e] / 2, 2 + lab[e] % 2, 1});
      return s;
    };
    std::map<std::vector<int>, double> exact;
    double mx = -1e300;
    std::vector<int> lab(4, 0);
    for (int code = 0; code < 256; ++code) {
      int c = code;
      for (int e = 0; e < 4; ++e, c /= 4) lab[static_cast<std::size_t>(e)] = c % 4;
      const double lp = -joint_logp(g, state_of(lab), {}).sigma;
      exact[lab] = lp;
      mx = std::max(mx, lp);
    }
    double z = 0.0;
    for (auto& kv : exact) z += std::exp(kv.second - mx);
    for (auto& kv : exact) kv.second = std::exp(kv.second - mx) / z;

    BlockState st(g, state_of({0, 0, 0, 0}), {}, {});
    Rng rng(2024);
    std::map<std::vector<int>, double> freq;
    const int n = 2000000;
    for (int it = 0; it < n; ++it) {
      mh_unit_steps(st, rng, 1.0, du, wu, 1);
      std::vector<int> cur(4);
      for (int e = 0; e < 4; ++e) {
        const auto& m = st.edge_labels(e)[0];
        cur[static_cast<std::size_t>(e)] = m.rd * 2 + (m.rw - 2);
      }
      freq[cur] += 1.0 / n;
    }
    double tv = 0.0;
    for (const auto& [k, p] : exact) tv += std::abs(p - (freq.count(k) ? freq[k] : 0.0));
    tv /= 2;
    CHECK(tv < 0.05);
    CHECK(std::abs(st.sigma() - st.full_score().sigma) < 1e-6);
  }

  TEST_CASE("fixed-label scoring") {
    const auto s1 = sample_corpus(1, 5, 6, std::vector<std::int64_t>(5, 20), noninformative_hyper(5, 1, 6), 3);
    const auto sc = fixed_label_score(s1, LabelVariant::DocClustering);
    const auto g = from_counts(s1.corpus);
    const auto st = labels_to_state(g, s1.labels, 1, LabelVariant::DocClustering);
    CHECK(st.B == 2);
    CHECK(sc.sigma == fixed_label_score(s1, LabelVariant::DocClustering).sigma);

    const auto s3 = sample_corpus(3, 8, 10, std::vector<std::int64_t>(8, 30), noninformative_hyper(8, 3, 10), 4);
    const auto g3 = from_counts(s3.corpus);
    const auto nd = labels_to_state(g3, s3.labels, 3, LabelVariant::NoDocClustering);
    CHECK(nd.B == 8 + 3);
    CHECK(fixed_label_score(s3, LabelVariant::NoDocClustering).sigma ==
          doctest::Approx(joint_logp(g3, nd, {}).sigma).epsilon(1e-12));

    auto bad = s3;
    bad.labels[0].count += 1;
    CHECK_THROWS(fixed_label_score(bad, LabelVariant::DocClustering));
  }

  TEST_CASE("fitted Σ does not exceed the true-label Σ") {
    const auto s = sample_corpus(2, 20, 30, std::vector<std::int64_t>(20, 40), make_hyper(0.1, 0.1, uniform_base(2), uniform_base(30), 20), 8);
    const auto g = from_counts(s.corpus);
    const double truth = fixed_label_score(s, LabelVariant::DocClustering).sigma;
    auto c = quick(Mode::Anneal, 5);
    c.n_restarts = 4;
    const auto r = fit(g, c);
    CHECK(r.score.sigma <= truth + 1e-3 * truth);
  }
}
