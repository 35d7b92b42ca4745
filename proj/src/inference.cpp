#include "topicblocks/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "topicblocks/util/error.hpp"

namespace topicblocks {

namespace {

constexpr double kGreedyEps = 1e-7;
constexpr double kTie = 1e-12;

bool accept(double delta, double T, Rng& rng) {
  if (!std::isfinite(delta)) return false;
  if (T <= 0.0) return delta < -kGreedyEps;
  const double x = -delta / T;
  if (std::abs(x) < kTie) return uniform01(rng) < 0.5;
  return x >= 0.0 || uniform01(rng) < std::exp(x);
}

struct Sweeper {
  BlockState& st;
  const InferenceConfig& cfg;
  Rng& rng;
  double T;
  SweepStats stats;

  bool fixed_side(Side s) const {
    return s == Side::Doc && st.options().fixed_doc_groups;
  }
  bool counts_ok() const {
    return cfg.fixed_word_groups <= 0 || st.nonempty(Side::Word) == cfg.fixed_word_groups;
  }
  bool valid() const { return st.feasible() && counts_ok(); }

  void check() {
    if (!cfg.check_consistency) return;
    const double full = st.full_score().sigma;
    if (std::abs(full - st.sigma()) > 1e-6 + 1e-9 * std::abs(full))
      throw IntegrityError("incremental Σ " + std::to_string(st.sigma()) + " differs from full recomputation " +
                           std::to_string(full));
  }

  // group on side s of a random half-edge two steps away from node i
  int neighbor_group(int i) {
    const auto& ed = st.node_edges(i);
    if (ed.empty()) return -1;
    const int e = ed[uniform_index(rng, ed.size())];
    const auto& ce = st.edge(e);
    const int j = st.node_side(i) == Side::Doc ? st.graph().word_node(ce.word) : ce.doc;
    const auto& ej = st.node_edges(j);
    const int e2 = ej[uniform_index(rng, ej.size())];
    const auto& labs = st.edge_labels(e2);
    const auto& m = labs[uniform_index(rng, labs.size())];
    return st.node_side(i) == Side::Doc ? m.rd : m.rw;
  }

  int random_group(Side s) {
    const auto gs = st.groups_of(s);
    if (gs.empty()) return -1;
    return gs[uniform_index(rng, gs.size())];
  }

  // moves all of node i's half-edges held in `from` (or all, if from < 0) to t
  double move_node(int i, int from, int t) {
    double d = 0.0;
    const bool doc = st.node_side(i) == Side::Doc;
    for (const int e : st.node_edges(i)) {
      const auto labs = st.edge_labels(e);
      for (const auto& m : labs) {
        const int cur = doc ? m.rd : m.rw;
        if (cur == t || (from >= 0 && cur != from)) continue;
        d += doc ? st.move_mass(e, m.rd, m.rw, t, m.rw, m.c) : st.move_mass(e, m.rd, m.rw, m.rd, t, m.c);
      }
    }
    return d;
  }

  double move_group(int r, int t) {
    double d = 0.0;
    const auto mem = st.members(r);
    for (const int i : mem) d += move_node(i, r, t);
    return d;
  }

  // Evaluates each candidate inside a transaction and applies the chosen one.
  // Greedy takes the best; otherwise one candidate is drawn and tested.
  template <class F>
  bool choose(std::size_t n, F&& apply, MoveStats& ms) {
    if (n == 0) return false;
    ms.proposed += static_cast<std::int64_t>(n);
    if (T > 0.0) {
      const std::size_t k = uniform_index(rng, n);
      st.begin();
      const double d = apply(k);
      if (valid() && accept(d, T, rng)) {
        st.commit();
        ++ms.accepted;
        check();
        return true;
      }
      st.rollback();
      return false;
    }
    double best = -kGreedyEps;
    std::size_t best_k = n;
    for (std::size_t k = 0; k < n; ++k) {
      st.begin();
      const double d = apply(k);
      const bool ok = valid() && std::isfinite(d);
      st.rollback();
      if (ok && d < best) {
        best = d;
        best_k = k;
      }
    }
    if (best_k == n) return false;
    st.begin();
    apply(best_k);
    st.commit();
    ++ms.accepted;
    check();
    return true;
  }

  void node_moves() {
    std::vector<int> order(static_cast<std::size_t>(st.num_nodes()));
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    for (const int i : order) {
      const Side s = st.node_side(i);
      if (fixed_side(s) || st.node_edges(i).empty()) continue;
      const auto mix = st.node_groups(i);
      std::vector<std::pair<int, int>> cands;  // (from, to); from < 0 moves everything
      auto add = [&](int from, int t) {
        if (t < 0 || st.side_of(t) != s) return;
        if (from < 0 && mix.size() == 1 && mix[0].first == t) return;
        if (from == t) return;
        for (const auto& c : cands)
          if (c.first == from && c.second == t) return;
        cands.emplace_back(from, t);
      };
      add(-1, neighbor_group(i));
      add(-1, random_group(s));
      const bool alone = mix.size() == 1 && st.members(mix[0].first).size() == 1;
      if (!alone && (cfg.fixed_word_groups <= 0 || s == Side::Doc)) add(-1, st.fresh_group(s, mix[0].first));
      if (mix.size() > 1 && cfg.overlap_moves) {
        // drop the smallest component into the largest
        auto lo = std::min_element(mix.begin(), mix.end(), [](auto& a, auto& b) { return a.second < b.second; });
        auto hi = std::max_element(mix.begin(), mix.end(), [](auto& a, auto& b) { return a.second < b.second; });
        if (lo != hi) add(lo->first, hi->first);
      }
      choose(cands.size(), [&](std::size_t k) { return move_node(i, cands[k].first, cands[k].second); }, stats.node);
    }
  }

  void label_moves() {
    if (!cfg.overlap_moves || st.options().Q == 1) return;
    std::vector<int> order(static_cast<std::size_t>(st.num_edges()));
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    if (cfg.label_move_fraction < 1.0)
      order.resize(static_cast<std::size_t>(std::ceil(static_cast<double>(order.size()) * cfg.label_move_fraction)));
    for (const int e : order) {
      for (const Side s : {Side::Word, Side::Doc}) {
        if (fixed_side(s)) continue;
        const auto& labs = st.edge_labels(e);
        std::int64_t tot = 0;
        for (const auto& m : labs) tot += m.c;
        std::int64_t u = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(tot)));
        std::size_t pick = 0;
        while (u >= labs[pick].c) u -= labs[pick++].c;
        const auto m = labs[pick];
        const auto& ce = st.edge(e);
        const int node = s == Side::Doc ? ce.doc : st.graph().word_node(ce.word);
        const int cur = s == Side::Doc ? m.rd : m.rw;
        std::vector<int> targets;
        const auto& mix = st.node_groups(node);
        if (mix.size() > 1) {
          int t = mix[uniform_index(rng, mix.size())].first;
          if (t != cur) targets.push_back(t);
        }
        const int nb = neighbor_group(node);
        if (nb >= 0 && nb != cur && std::find(targets.begin(), targets.end(), nb) == targets.end())
          targets.push_back(nb);
        std::vector<std::pair<int, std::int64_t>> cands;
        for (const int t : targets) {
          cands.emplace_back(t, m.c);
          if (m.c > 1) cands.emplace_back(t, 1);
        }
        choose(
            cands.size(),
            [&](std::size_t k) {
              const auto [t, amt] = cands[k];
              return s == Side::Doc ? st.move_mass(e, m.rd, m.rw, t, m.rw, amt)
                                    : st.move_mass(e, m.rd, m.rw, m.rd, t, amt);
            },
            stats.label);
      }
    }
  }

  void merge_moves(Side s) {
    if (fixed_side(s) || (s == Side::Word && cfg.fixed_word_groups > 0)) return;
    auto gs = st.groups_of(s);
    shuffle(gs, rng);
    for (const int r : gs) {
      if (st.empty_group(r) || st.nonempty(s) <= 1) continue;
      std::vector<int> cands;
      const auto& mem = st.members(r);
      const int nb = neighbor_group(mem[uniform_index(rng, mem.size())]);
      if (nb >= 0 && nb != r && !st.empty_group(nb)) cands.push_back(nb);
      const int rg = random_group(s);
      if (rg >= 0 && rg != r && std::find(cands.begin(), cands.end(), rg) == cands.end()) cands.push_back(rg);
      choose(cands.size(), [&](std::size_t k) { return move_group(r, cands[k]); }, stats.merge);
    }
  }

  // member -> sparse profile over neighbor groups of its half-edges in r
  std::vector<std::unordered_map<int, double>> profiles(int r, const std::vector<int>& mem) {
    std::vector<std::unordered_map<int, double>> p(mem.size());
    const bool doc = st.side_of(r) == Side::Doc;
    for (std::size_t a = 0; a < mem.size(); ++a) {
      double tot = 0.0;
      for (const int e : st.node_edges(mem[a]))
        for (const auto& m : st.edge_labels(e))
          if ((doc ? m.rd : m.rw) == r) {
            p[a][doc ? m.rw : m.rd] += static_cast<double>(m.c);
            tot += static_cast<double>(m.c);
          }
      if (tot > 0)
        for (auto& kv : p[a]) kv.second /= tot;
    }
    return p;
  }

  std::vector<int> two_means(const std::vector<std::unordered_map<int, double>>& p) {
    const std::size_t n = p.size();
    std::vector<int> assign(n, 0);
    const std::size_t a = uniform_index(rng, n);
    std::size_t b = uniform_index(rng, n - 1);
    if (b >= a) ++b;
    std::unordered_map<int, double> c[2] = {p[a], p[b]};
    for (int it = 0; it < 5; ++it) {
      double cn[2] = {0.0, 0.0};
      for (int k = 0; k < 2; ++k)
        for (const auto& kv : c[k]) cn[k] += kv.second * kv.second;
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        double dot[2] = {0.0, 0.0};
        for (int k = 0; k < 2; ++k)
          for (const auto& kv : p[i]) {
            auto f = c[k].find(kv.first);
            if (f != c[k].end()) dot[k] += kv.second * f->second;
          }
        const int z = cn[1] - 2 * dot[1] < cn[0] - 2 * dot[0] ? 1 : 0;
        if (z != assign[i]) changed = true;
        assign[i] = z;
      }
      std::size_t cnt[2] = {0, 0};
      c[0].clear();
      c[1].clear();
      for (std::size_t i = 0; i < n; ++i) {
        ++cnt[assign[i]];
        for (const auto& kv : p[i]) c[assign[i]][kv.first] += kv.second;
      }
      if (cnt[0] == 0 || cnt[1] == 0) break;
      for (int k = 0; k < 2; ++k)
        for (auto& kv : c[k]) kv.second /= static_cast<double>(cnt[k]);
      if (!changed && it > 0) break;
    }
    std::size_t ones = 0;
    for (const int z : assign) ones += static_cast<std::size_t>(z);
    if (ones == 0 || ones == n) {
      // degenerate profiles: random bisection
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      shuffle(idx, rng);
      for (std::size_t k = 0; k < n; ++k) assign[idx[k]] = k < n / 2 ? 1 : 0;
    }
    return assign;
  }

  void split_moves(Side s) {
    if (fixed_side(s) || (s == Side::Word && cfg.fixed_word_groups > 0)) return;
    auto gs = st.groups_of(s);
    shuffle(gs, rng);
    for (const int r : gs) {
      const auto mem = st.members(r);
      if (mem.size() < 2) continue;
      auto assign = two_means(profiles(r, mem));
      const int t = st.fresh_group(s, r);
      ++stats.split.proposed;
      const double before = st.sigma();
      st.begin();
      for (std::size_t a = 0; a < mem.size(); ++a)
        if (assign[a]) move_node(mem[a], r, t);
      // one refinement pass over the members
      std::vector<std::size_t> idx(mem.size());
      std::iota(idx.begin(), idx.end(), 0);
      shuffle(idx, rng);
      for (const std::size_t a : idx) {
        const int from = assign[a] ? t : r, to = assign[a] ? r : t;
        const double dd = move_node(mem[a], from, to);
        if (dd < -kGreedyEps && valid())
          assign[a] ^= 1;
        else
          move_node(mem[a], to, from);
      }
      const double delta = st.sigma() - before;
      if (valid() && accept(delta, T, rng)) {
        st.commit();
        ++stats.split.accepted;
        check();
      } else {
        st.rollback();
      }
    }
  }

  // nonempty children per block, for levels 2..L
  std::vector<std::vector<int>> occupancy() const {
    std::vector<std::vector<int>> occ;
    std::vector<char> ne(static_cast<std::size_t>(st.capacity()));
    for (int r = 0; r < st.capacity(); ++r) ne[static_cast<std::size_t>(r)] = !st.empty_group(r);
    for (int l = 1; l < st.depth(); ++l) {
      std::vector<int> o(static_cast<std::size_t>(st.level_size(l + 1)), 0);
      for (std::size_t c = 0; c < ne.size(); ++c)
        if (ne[c]) ++o[static_cast<std::size_t>(st.parent(l, static_cast<int>(c)))];
      ne.assign(o.size(), 0);
      for (std::size_t b = 0; b < o.size(); ++b) ne[b] = o[b] > 0;
      occ.push_back(std::move(o));
    }
    return occ;
  }

  bool block_nonempty(const std::vector<std::vector<int>>& occ, int l, int r) const {
    return l == 1 ? !st.empty_group(r) : occ[static_cast<std::size_t>(l - 2)][static_cast<std::size_t>(r)] > 0;
  }

  void block_moves(int l) {
    const int n = l == 1 ? st.capacity() : st.level_size(l);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    for (const int r : order) {
      auto occ = occupancy();
      if (!block_nonempty(occ, l, r)) continue;
      const Side s = st.level_side(l, r);
      const int cur = st.parent(l, r);
      std::vector<int> same, spare;
      for (int p = 0; p < st.level_size(l + 1); ++p) {
        if (p == cur) continue;
        const bool ne = occ[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(p)] > 0;
        if (ne && st.level_side(l + 1, p) == s) same.push_back(p);
        if (!ne && (l + 1 == st.depth() || st.level_side(l + 1, p) == s)) spare.push_back(p);
      }
      std::vector<int> cands;
      if (!same.empty()) cands.push_back(same[uniform_index(rng, same.size())]);
      if (occ[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(cur)] > 1)
        cands.push_back(spare.empty() ? st.fresh_block(l + 1, s) : spare.front());
      choose(cands.size(), [&](std::size_t k) { return st.set_parent(l, r, cands[k]); }, stats.hierarchy);
    }
  }

  bool try_hierarchy(const Hierarchy& h) {
    const Hierarchy old = st.export_hierarchy();
    ++stats.hierarchy.proposed;
    const double d = st.set_hierarchy(h);
    if (accept(d, T, rng)) {
      ++stats.hierarchy.accepted;
      check();
      return true;
    }
    st.set_hierarchy(old);
    return false;
  }

  void hierarchy_moves() {
    for (int l = 1; l < st.depth(); ++l) block_moves(l);
    const auto occ = occupancy();
    const int L = st.depth();
    // top-level blocks per side
    int top_n[2] = {0, 0};
    const int n_top = L == 1 ? st.capacity() : st.level_size(L);
    for (int b = 0; b < n_top; ++b)
      if (block_nonempty(occ, L, b)) ++top_n[static_cast<int>(st.level_side(L, b))];
    if (top_n[0] > 1 || top_n[1] > 1) {
      Hierarchy h = st.export_hierarchy();
      std::vector<int> up(static_cast<std::size_t>(n_top));
      for (int b = 0; b < n_top; ++b) up[static_cast<std::size_t>(b)] = static_cast<int>(st.level_side(L, b));
      h.parents.push_back(std::move(up));
      if (try_hierarchy(h)) return;
    }
    if (L >= 2) {
      Hierarchy h = st.export_hierarchy();
      h.parents.pop_back();
      try_hierarchy(h);
    }
  }

  void run() {
    node_moves();
    label_moves();
    for (const Side s : {Side::Doc, Side::Word}) {
      merge_moves(s);
      split_moves(s);
    }
    if (cfg.hierarchy_moves) hierarchy_moves();
  }
};

}  // namespace


Mode parse_mode(const std::string& s) {
  if (s == "greedy") return Mode::Greedy;
  if (s == "mcmc") return Mode::Mcmc;
  if (s == "anneal") return Mode::Anneal;
  throw InvalidInput("unknown mode '" + s + "' (expected mcmc, greedy or anneal)");
}

DocClustering parse_doc_clustering(const std::string& s) {
  if (s == "per-doc-group" || s == "fig2-mode") return DocClustering::PerDocGroup;
  if (s == "clustered") return DocClustering::Clustered;
  throw InvalidInput("unknown doc clustering '" + s + "' (expected per-doc-group or clustered)");
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Greedy: return "greedy";
    case Mode::Mcmc: return "mcmc";
    case Mode::Anneal: return "anneal";
  }
  return "?";
}

const char* doc_clustering_name(DocClustering d) {
  return d == DocClustering::PerDocGroup ? "per-doc-group" : "clustered";
}

void InferenceConfig::validate() const {
  if (Q < 0) throw InvalidInput("overlap Q must be >= 0");
  if (n_sweeps <= 0) throw InvalidInput("n_sweeps must be positive");
  if (n_restarts <= 0) throw InvalidInput("n_restarts must be positive");
  if (sweeps_per_temperature <= 0) throw InvalidInput("sweeps_per_temperature must be positive");
  if (window <= 0) throw InvalidInput("convergence window must be positive");
  if (!(tolerance >= 0.0)) throw InvalidInput("convergence tolerance must be >= 0");
  if (init_doc_groups < 0 || init_word_groups < 0 || fixed_word_groups < 0)
    throw InvalidInput("group counts must be >= 0");
  if (!(label_move_fraction > 0.0 && label_move_fraction <= 1.0))
    throw InvalidInput("label_move_fraction must be in (0, 1]");
  for (std::size_t i = 0; i < temperatures.size(); ++i) {
    if (!(temperatures[i] >= 0.0) || !std::isfinite(temperatures[i]))
      throw InvalidInput("temperatures must be finite and >= 0");
    if (i > 0 && temperatures[i] > temperatures[i - 1])
      throw InvalidInput("temperature schedule must be nonincreasing");
  }
}

LabeledState init_state(const BipartiteMultigraph& g, const InferenceConfig& cfg, Rng& rng) {
  const bool per_doc = cfg.doc_clustering == DocClustering::PerDocGroup;
  const bool agg = cfg.init == InitKind::Agglomerative;
  int Bd = per_doc ? g.D : (cfg.init_doc_groups > 0 ? cfg.init_doc_groups : (agg ? g.D : std::min(g.D, 10)));
  int Bw = cfg.fixed_word_groups > 0 ? cfg.fixed_word_groups
                                     : (cfg.init_word_groups > 0 ? cfg.init_word_groups : (agg ? g.V : std::min(g.V, 10)));
  Bd = std::max(Bd, 1);
  Bw = std::max(Bw, 1);
  std::vector<int> doc_group(static_cast<std::size_t>(g.D)), word_group(static_cast<std::size_t>(g.V));
  for (int d = 0; d < g.D; ++d)
    doc_group[static_cast<std::size_t>(d)] =
        per_doc || (agg && cfg.init_doc_groups == 0) ? d % Bd : static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(Bd)));
  if (agg && cfg.fixed_word_groups == 0 && cfg.init_word_groups == 0) {
    for (int w = 0; w < g.V; ++w) word_group[static_cast<std::size_t>(w)] = w % Bw;
  } else {
    // every group gets at least one word when possible
    std::vector<int> ids(static_cast<std::size_t>(g.V));
    std::iota(ids.begin(), ids.end(), 0);
    shuffle(ids, rng);
    for (std::size_t k = 0; k < ids.size(); ++k)
      word_group[static_cast<std::size_t>(ids[k])] =
          k < static_cast<std::size_t>(Bw) ? static_cast<int>(k) : static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(Bw)));
  }
  LabeledState s;
  s.B = Bd + Bw;
  s.side_of_group.assign(static_cast<std::size_t>(Bd), Side::Doc);
  s.side_of_group.resize(static_cast<std::size_t>(s.B), Side::Word);
  s.bundles.reserve(g.edges.size());
  for (const auto& e : g.edges)
    s.bundles.push_back({e.doc, e.word, doc_group[static_cast<std::size_t>(e.doc)],
                         Bd + word_group[static_cast<std::size_t>(e.word)], e.count});
  return s;
}

SweepStats sweep(BlockState& st, double T, Rng& rng, const InferenceConfig& cfg) {
  Sweeper sw{st, cfg, rng, T, {}};
  sw.run();
  return sw.stats;
}

MoveStats mh_unit_steps(BlockState& st, Rng& rng, double T, const std::vector<int>& doc_universe,
                        const std::vector<int>& word_universe, std::int64_t steps) {
  MoveStats ms;
  if (st.num_edges() == 0 || (doc_universe.empty() && word_universe.empty())) return ms;
  std::vector<double> w(static_cast<std::size_t>(st.num_edges()));
  for (int e = 0; e < st.num_edges(); ++e) w[static_cast<std::size_t>(e)] = static_cast<double>(st.edge(e).count);
  const AliasSampler pick_edge(w);
  for (std::int64_t it = 0; it < steps; ++it) {
    const int e = static_cast<int>(pick_edge(rng));
    const auto& labs = st.edge_labels(e);
    std::int64_t u = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(st.edge(e).count)));
    std::size_t k = 0;
    while (u >= labs[k].c) u -= labs[k++].c;
    const auto m = labs[k];
    bool doc;
    if (doc_universe.empty())
      doc = false;
    else if (word_universe.empty())
      doc = true;
    else
      doc = uniform01(rng) < 0.5;
    const auto& uni = doc ? doc_universe : word_universe;
    const int t = uni[uniform_index(rng, uni.size())];
    ++ms.proposed;
    const int nrd = doc ? t : m.rd, nrw = doc ? m.rw : t;
    if (nrd == m.rd && nrw == m.rw) continue;
    std::int64_t dest = 0;
    for (const auto& x : labs)
      if (x.rd == nrd && x.rw == nrw) dest = x.c;
    const double log_q = std::log(static_cast<double>(dest + 1)) - std::log(static_cast<double>(m.c));
    st.begin();
    const double d = st.move_mass(e, m.rd, m.rw, nrd, nrw, 1);
    bool ok = st.feasible() && std::isfinite(d);
    if (ok) {
      const double x = -d / T + log_q;
      if (std::abs(x) < kTie)
        ok = uniform01(rng) < 0.5;
      else
        ok = x >= 0.0 || uniform01(rng) < std::exp(x);
    }
    if (ok) {
      st.commit();
      ++ms.accepted;
    } else {
      st.rollback();
    }
  }
  return ms;
}

namespace {

void check_drift(BlockState& st) {
  const double run = st.sigma();
  const double full = st.resync();
  if (std::abs(run - full) > 1e-6 + 1e-9 * std::abs(full))
    throw IntegrityError("incremental Σ drifted: running " + std::to_string(run) + ", recomputed " +
                         std::to_string(full));
}

}  // namespace

FitResult fit_single(const BipartiteMultigraph& g, const InferenceConfig& cfg, std::uint64_t restart) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(cfg.seed, "restart", restart);
  const LabeledState init = init_state(g, cfg, rng);
  StateOptions opt;
  opt.Q = cfg.Q;
  opt.fixed_doc_groups = cfg.doc_clustering == DocClustering::PerDocGroup;
  BlockState st(g, init, {}, opt);

  FitResult res;
  double best = st.sigma();
  LabeledState best_state = st.export_state();
  Hierarchy best_h = st.export_hierarchy();
  std::vector<double> best_hist;
  int sweeps = 0;
  bool converged = false;

  auto record = [&] {
    check_drift(st);
    const double s = st.sigma();
    res.trace.push_back(s);
    if (s < best) {
      best = s;
      best_state = st.export_state();
      best_h = st.export_hierarchy();
    }
    best_hist.push_back(best);
    ++sweeps;
  };
  auto window_done = [&] {
    const auto n = best_hist.size();
    const auto w = static_cast<std::size_t>(cfg.window);
    return n > w && best_hist[n - 1 - w] - best_hist[n - 1] < cfg.tolerance;
  };

  if (cfg.mode == Mode::Mcmc) {
    std::vector<int> uni[2];
    for (int r = 0; r < st.capacity(); ++r) uni[static_cast<int>(st.side_of(r))].push_back(r);
    if (opt.fixed_doc_groups) uni[0].clear();
    const double T = cfg.temperatures.empty() ? 1.0 : cfg.temperatures.back() > 0 ? cfg.temperatures.back() : 1.0;
    while (sweeps < cfg.n_sweeps) {
      res.stats.unit += mh_unit_steps(st, rng, T, uni[0], uni[1], std::max<std::int64_t>(g.E, 1));
      record();
    }
    converged = true;
  } else {
    if (cfg.mode == Mode::Anneal)
      for (const double T : cfg.temperatures)
        for (int k = 0; k < cfg.sweeps_per_temperature && sweeps < cfg.n_sweeps; ++k) {
          res.stats += sweep(st, T, rng, cfg);
          record();
        }
    best_hist.clear();
    best_hist.push_back(st.sigma());
    while (sweeps < cfg.n_sweeps) {
      const SweepStats ss = sweep(st, 0.0, rng, cfg);
      res.stats += ss;
      record();
      if (ss.accepted() == 0 || window_done()) {
        converged = true;
        break;
      }
    }
    if (g.E == 0) converged = true;
  }

  if (cfg.mode == Mode::Greedy) {
    best_state = st.export_state();
    best_h = st.export_hierarchy();
  }
  compact_groups(best_state, best_h);
  if (best_state.B == 0) {
    best_state.B = 2;
    best_state.side_of_group = {Side::Doc, Side::Word};
  }
  res.score = joint_logp(g, best_state, best_h, JointOptions{cfg.Q});
  res.score.model_id = "hSBM";
  res.score.parametrization = std::string(doc_clustering_name(cfg.doc_clustering)) + ",Q=" + std::to_string(cfg.Q);
  res.state = std::move(best_state);
  res.hierarchy = std::move(best_h);
  res.converged = converged;
  for (const Side s : res.state.side_of_group) (s == Side::Doc ? res.doc_groups : res.word_groups)++;
  res.depth = res.hierarchy.depth();
  res.restart_sigma = {res.score.sigma};
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

FitResult fit(const BipartiteMultigraph& g, const InferenceConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int R = cfg.n_restarts;
  std::vector<FitResult> runs(static_cast<std::size_t>(R));
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(R));
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel && R > 1)
  for (int k = 0; k < R; ++k) {
    try {
      runs[static_cast<std::size_t>(k)] = fit_single(g, cfg, static_cast<std::uint64_t>(k));
    } catch (...) {
      errs[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (const auto& e : errs)
    if (e) std::rethrow_exception(e);
  int best = 0;
  for (int k = 1; k < R; ++k)
    if (runs[static_cast<std::size_t>(k)].score.sigma < runs[static_cast<std::size_t>(best)].score.sigma) best = k;
  FitResult res = std::move(runs[static_cast<std::size_t>(best)]);
  res.best_restart = best;
  res.restart_sigma.assign(static_cast<std::size_t>(R), 0.0);
  for (int k = 0; k < R; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    res.restart_sigma[ks] = k == best ? res.score.sigma : runs[ks].score.sigma;
    if (k != best) res.stats += runs[ks].stats;
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

LabeledState labels_to_state(const BipartiteMultigraph& g, const std::vector<TopicCount>& labels, int K,
                             LabelVariant v) {
  if (K <= 0) throw InvalidInput("K must be positive");
  LabeledState s;
  const bool per_doc = v == LabelVariant::NoDocClustering;
  const int Bd = per_doc ? g.D : K;
  s.B = Bd + K;
  s.side_of_group.assign(static_cast<std::size_t>(Bd), Side::Doc);
  s.side_of_group.resize(static_cast<std::size_t>(s.B), Side::Word);
  s.bundles.reserve(labels.size());
  for (const auto& l : labels) {
    if (l.r < 0 || l.r >= K) throw InvalidInput("topic label " + std::to_string(l.r) + " outside 0.." + std::to_string(K - 1));
    if (l.count <= 0) continue;
    s.bundles.push_back({l.d, l.w, per_doc ? l.d : l.r, Bd + l.r, l.count});
  }
  canonicalize(s);
  validate_state(g, s);
  return s;
}

ModelScore fixed_label_score(const LdaSample& sample, LabelVariant v) {
  check_labels(sample.corpus, sample.labels, sample.K);
  const BipartiteMultigraph g = from_counts(sample.corpus);
  const LabeledState s = labels_to_state(g, sample.labels, sample.K, v);
  ModelScore sc = joint_logp(g, s, {}, {});
  sc.model_id = "hSBM";
  sc.parametrization = v == LabelVariant::NoDocClustering ? "true-labels,no-doc-clustering" : "true-labels,doc-clustering";
  return sc;
}

}  // namespace topicblocks
