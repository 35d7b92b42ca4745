#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "topicblocks/block_state.hpp"
#include "topicblocks/util/rng.hpp"

using namespace topicblocks;

namespace {

BipartiteMultigraph random_graph(Rng& rng, int D, int V, int n_edges, int max_count) {
  std::vector<CountEntry> edges;
  for (int k = 0; k < n_edges; ++k)
    edges.push_back({static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(D))),
                     static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(V))),
                     1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(max_count)))});
  return make_graph(D, V, edges);
}

LabeledState random_state(Rng& rng, const BipartiteMultigraph& g, int Bd, int Bw) {
  LabeledState s;
  s.B = Bd + Bw;
  for (int r = 0; r < Bd; ++r) s.side_of_group.push_back(Side::Doc);
  for (int r = 0; r < Bw; ++r) s.side_of_group.push_back(Side::Word);
  for (const auto& e : g.edges)
    for (std::int64_t u = 0; u < e.count; ++u)
      s.bundles.push_back({e.doc, e.word, static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(Bd))),
                           Bd + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(Bw))), 1});
  return s;
}

Hierarchy random_hierarchy(Rng& rng, const LabeledState& s, int levels) {
  Hierarchy h;
  std::vector<Side> side = s.side_of_group;
  for (int l = 0; l < levels; ++l) {
    std::vector<int> par(side.size());
    std::vector<Side> up;
    // two candidate parents per side
    for (std::size_t r = 0; r < side.size(); ++r)
      par[r] = 2 * static_cast<int>(side[r]) + static_cast<int>(uniform_index(rng, 2));
    up = {Side::Doc, Side::Doc, Side::Word, Side::Word};
    h.parents.push_back(par);
    side = up;
  }
  return h;
}

void random_moves(BlockState& st, Rng& rng, int n) {
  for (int k = 0; k < n; ++k) {
    const int e = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(st.num_edges())));
    const auto& ls = st.edge_labels(e);
    const auto m = ls[uniform_index(rng, ls.size())];
    auto docs = st.groups_of(Side::Doc, false);
    auto words = st.groups_of(Side::Word, false);
    const int nrd = uniform01(rng) < 0.5 ? m.rd : docs[uniform_index(rng, docs.size())];
    const int nrw = words[uniform_index(rng, words.size())];
    const auto amount = 1 + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(m.c)));
    st.move_mass(e, m.rd, m.rw, nrd, nrw, amount);
  }
}

}  // namespace

TEST_SUITE("block_state") {
  TEST_CASE("initial Σ equals the joint score") {
    Rng rng = make_rng(5, "bs-init");
    for (int rep = 0; rep < 30; ++rep) {
      auto g = random_graph(rng, 4, 5, 8, 3);
      auto s = random_state(rng, g, 2, 3);
      const int levels = static_cast<int>(uniform_index(rng, 3));
      auto h = random_hierarchy(rng, s, levels);
      BlockState st(g, s, h);
      CHECK(st.sigma() == doctest::Approx(joint_logp(g, s, h).sigma).epsilon(1e-12));
    }
  }

  TEST_CASE("incremental Σ tracks full recomputation after every move") {
    Rng rng = make_rng(6, "bs-moves");
    for (int rep = 0; rep < 20; ++rep) {
      auto g = random_graph(rng, 5, 6, 12, 4);
      auto s = random_state(rng, g, 3, 3);
      auto h = random_hierarchy(rng, s, static_cast<int>(uniform_index(rng, 3)));
      BlockState st(g, s, h);
      for (int k = 0; k < 40; ++k) {
        random_moves(st, rng, 1);
        REQUIRE(std::abs(st.sigma() - st.full_score().sigma) < 1e-6);
      }
      const double before = st.sigma();
      CHECK(std::abs(st.resync() - before) < 1e-6);
    }
  }

  TEST_CASE("rollback restores the state exactly") {
    Rng rng = make_rng(7, "bs-rollback");
    auto g = random_graph(rng, 6, 6, 14, 3);
    auto s = random_state(rng, g, 3, 2);
    auto h = random_hierarchy(rng, s, 1);
    BlockState st(g, s, h);
    const double s0 = st.sigma();
    const auto ex0 = st.export_state();
    st.begin();
    random_moves(st, rng, 25);
    st.set_parent(1, 0, 1);
    st.rollback();
    CHECK(st.sigma() == s0);
    CHECK(st.export_state().bundles == ex0.bundles);
    CHECK(std::abs(st.full_score().sigma - s0) < 1e-9);
    CHECK(std::abs(st.resync() - s0) < 1e-9);
  }

  TEST_CASE("hierarchy edits match full recomputation") {
    Rng rng = make_rng(8, "bs-hier");
    auto g = random_graph(rng, 6, 6, 14, 3);
    auto s = random_state(rng, g, 3, 3);
    BlockState st(g, s);
    auto h = random_hierarchy(rng, s, 2);
    st.set_hierarchy(h);
    CHECK(std::abs(st.sigma() - joint_logp(g, s, h).sigma) < 1e-9);
    st.set_parent(1, 4, h.parents[0][4] == 2 ? 3 : 2);
    CHECK(std::abs(st.sigma() - st.full_score().sigma) < 1e-9);
    const int nb = st.fresh_block(2, Side::Doc);
    st.set_parent(1, 0, nb);
    CHECK(std::abs(st.sigma() - st.full_score().sigma) < 1e-9);
  }

  TEST_CASE("fresh groups and Q bound") {
    auto g = make_graph(1, 2, {{0, 0, 2}, {0, 1, 1}});
    LabeledState s{2, {Side::Doc, Side::Word}, {{0, 0, 0, 1, 2}, {0, 1, 0, 1, 1}}};
    BlockState st(g, s, {}, StateOptions{1, false});
    const int r = st.fresh_group(Side::Word);
    CHECK(st.side_of(r) == Side::Word);
    CHECK(st.empty_group(r));
    st.move_mass(0, 0, 1, 0, r, 1);
    CHECK_FALSE(st.feasible());
    st.move_mass(0, 0, 1, 0, r, 1);
    CHECK(st.feasible());
    CHECK(std::abs(st.sigma() - st.full_score().sigma) < 1e-9);
  }
}
