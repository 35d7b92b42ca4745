#include "topicblocks/sbm_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "topicblocks/partitions.hpp"
#include "topicblocks/util/error.hpp"
#include "topicblocks/util/math.hpp"

namespace topicblocks {

namespace {

std::size_t idx(int r, int s, int B) {
  return static_cast<std::size_t>(r) * static_cast<std::size_t>(B) + static_cast<std::size_t>(s);
}

double entry_multiplicity(const HalfEdgeBundle& b) {
  if (b.i != b.j) return log_factorial(b.count);
  if (b.r != b.s) return log_factorial(b.count);
  return log_double_factorial_even(2 * b.count);
}

double edge_count_numerator(const std::vector<std::int64_t>& e, int B) {
  double s = 0.0;
  for (int r = 0; r < B; ++r) {
    const std::int64_t err = e[idx(r, r, B)];
    if (err % 2 != 0) throw IntegrityError("odd diagonal edge count e_rr at group " + std::to_string(r));
    s += log_double_factorial_even(err);
    for (int t = r + 1; t < B; ++t) s += log_factorial(e[idx(r, t, B)]);
  }
  return s;
}

std::int64_t edge_total(const std::vector<std::int64_t>& e, int B) {
  std::int64_t E2 = 0;
  for (int r = 0; r < B; ++r)
    for (int t = 0; t < B; ++t) E2 += e[idx(r, t, B)];
  if (E2 % 2 != 0) throw IntegrityError("edge count matrix has odd total");
  return E2 / 2;
}

}  // namespace

double logp_graph_given_ke(const LabeledMultigraph& m, const DerivedCounts& c) {
  double lp = edge_count_numerator(c.e, c.B);
  for (const auto& ki : c.k)
    for (const auto& [r, k] : ki) lp += log_factorial(k);
  for (const auto& b : canonical_entries(m)) lp -= entry_multiplicity(b);
  for (std::int64_t er : c.e_r) lp -= log_factorial(er);
  return lp;
}

double logp_k_flat(const DerivedCounts& c, std::int64_t N) {
  double lp = 0.0;
  for (std::int64_t er : c.e_r) {
    if (er == 0) continue;
    lp -= log_multiset(static_cast<double>(N), static_cast<double>(er));
  }
  return lp;
}

double logp_e_geometric(const std::vector<std::int64_t>& e, int B, double omega_bar) {
  const auto E = static_cast<double>(edge_total(e, B));
  const double cells = static_cast<double>(B) * (B + 1) / 2.0;
  if (E == 0) return -cells * std::log1p(std::max(omega_bar, 0.0));
  if (!(omega_bar > 0)) return kNegInf;
  return E * std::log(omega_bar) - (E + cells) * std::log1p(omega_bar);
}

double logp_marginal_flat(const LabeledMultigraph& m, double omega_bar) {
  const auto B = static_cast<std::size_t>(m.B);
  const auto entries = canonical_entries(m);
  std::vector<std::int64_t> e(B * B, 0), er(B, 0);
  std::map<std::pair<int, int>, std::int64_t> k;
  std::int64_t E = 0;
  double denom = 0.0;
  for (const auto& b : entries) {
    E += b.count;
    const auto r = static_cast<std::size_t>(b.r), s = static_cast<std::size_t>(b.s);
    if (r == s) {
      e[r * B + r] += 2 * b.count;
    } else {
      e[r * B + s] += b.count;
      e[s * B + r] += b.count;
    }
    er[r] += b.count;
    er[s] += b.count;
    k[{b.i, b.r}] += b.count;
    k[{b.j, b.s}] += b.count;
    denom += entry_multiplicity(b);
  }
  const double cells = static_cast<double>(B) * static_cast<double>(B + 1) / 2.0;
  double lp = 0.0;
  if (E > 0) {
    if (!(omega_bar > 0)) return kNegInf;
    lp += static_cast<double>(E) * std::log(omega_bar);
  }
  lp -= (static_cast<double>(E) + cells) * std::log1p(std::max(omega_bar, 0.0));
  lp += edge_count_numerator(e, m.B) - denom;
  for (std::size_t r = 0; r < B; ++r)
    lp += log_factorial(m.N - 1) - log_factorial(er[r] + m.N - 1);
  for (const auto& kv : k) lp += log_factorial(kv.second);
  return lp;
}

double overlap_partition_term(std::int64_t N, int B, int Q, const std::vector<std::int64_t>& n_q,
                              double sum_log_fact_nb) {
  if (N == 0) return 0.0;
  const int Qe = Q <= 0 ? B : std::min(Q, B);
  double lp = -log_binom(static_cast<double>(N + Qe - 1), static_cast<double>(N)) - log_factorial(N);
  for (std::size_t q = 1; q < n_q.size(); ++q) {
    if (n_q[q] == 0) continue;
    if (static_cast<int>(q) > Qe) return kNegInf;
    lp -= log_multiset_logn(log_binom(B, static_cast<double>(q)), n_q[q]);
  }
  return lp + sum_log_fact_nb;
}

double logp_overlap_partition(const OverlappingPartition& b) {
  const int Qe = b.Q <= 0 ? b.B : std::min(b.Q, b.B);
  std::vector<std::int64_t> n_q(static_cast<std::size_t>(std::max(b.B, 0)) + 1, 0);
  std::int64_t total = 0;
  double slf = 0.0;
  for (const auto& [mix, n] : b.mixtures) {
    if (n <= 0) continue;
    if (mix.empty()) throw IntegrityError("empty mixture with nonzero count");
    if (static_cast<int>(mix.size()) > Qe)
      throw InvalidInput("mixture of size " + std::to_string(mix.size()) + " exceeds Q=" +
                         std::to_string(Qe));
    for (int r : mix)
      if (r < 0 || r >= b.B) throw IntegrityError("mixture group outside 0..B-1");
    n_q[mix.size()] += n;
    total += n;
    slf += log_factorial(n);
  }
  if (total != b.N)
    throw IntegrityError("mixture counts sum to " + std::to_string(total) + ", expected N=" +
                         std::to_string(b.N));
  return overlap_partition_term(b.N, b.B, b.Q, n_q, slf);
}

double component_degree_term(std::int64_t e, std::int64_t n, double sum_log_fact_hist) {
  return -log_count_partitions(e, n) + sum_log_fact_hist - log_factorial(n);
}

double mixture_degree_term(const MixtureDegrees& m) {
  double lp = 0.0;
  for (const auto& deg : m.degrees) {
    std::vector<std::int64_t> d = deg;
    std::sort(d.begin(), d.end());
    std::int64_t e = 0;
    double slh = 0.0;
    for (std::size_t i = 0; i < d.size();) {
      std::size_t j = i;
      while (j < d.size() && d[j] == d[i]) ++j;
      slh += log_factorial(static_cast<std::int64_t>(j - i));
      i = j;
    }
    for (auto x : d) {
      if (x <= 0) throw IntegrityError("nonpositive degree inside a mixture component");
      e += x;
    }
    lp += component_degree_term(e, static_cast<std::int64_t>(d.size()), slh);
  }
  return lp;
}

double degree_sum_term(std::int64_t e_r, std::int64_t S_r, std::int64_t m_r) {
  if (m_r == 0) return 0.0;
  if (e_r < S_r) return kNegInf;
  return -log_binom(static_cast<double>(e_r - S_r + m_r - 1), static_cast<double>(m_r - 1));
}

double logp_k_given_eb(const std::vector<std::vector<std::pair<int, std::int64_t>>>& k) {
  std::map<std::vector<int>, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i].empty()) continue;
    std::vector<int> mix;
    for (const auto& [r, kr] : k[i]) {
      if (kr <= 0)
        throw IntegrityError("node " + std::to_string(i) + " lists group " + std::to_string(r) +
                             " with zero degree");
      mix.push_back(r);
    }
    if (!std::is_sorted(mix.begin(), mix.end()) ||
        std::adjacent_find(mix.begin(), mix.end()) != mix.end())
      throw IntegrityError("node " + std::to_string(i) + " has unsorted or repeated groups");
    members[mix].push_back(i);
  }
  std::map<int, std::int64_t> e_r, S_r, m_r;
  double lp = 0.0;
  for (const auto& [mix, nodes] : members) {
    MixtureDegrees md;
    md.groups = mix;
    md.degrees.resize(mix.size());
    for (std::size_t c = 0; c < mix.size(); ++c) {
      for (std::size_t i : nodes) {
        const auto kr = k[i][c].second;
        md.degrees[c].push_back(kr);
        e_r[mix[c]] += kr;
      }
      S_r[mix[c]] += static_cast<std::int64_t>(nodes.size());
      m_r[mix[c]] += 1;
    }
    lp += mixture_degree_term(md);
  }
  for (const auto& [r, e] : e_r) lp += degree_sum_term(e, S_r[r], m_r[r]);
  return lp;
}

std::vector<LevelCounts> build_levels(int B, const std::vector<Side>& side,
                                      const std::vector<std::int64_t>& e1, const Hierarchy& h) {
  if (static_cast<int>(side.size()) != B || e1.size() != static_cast<std::size_t>(B) * B)
    throw IntegrityError("level 1: dimensions do not match B=" + std::to_string(B));
  std::vector<LevelCounts> levels;
  levels.push_back({B, side, e1, {}});
  for (std::size_t l = 0; l < h.parents.size(); ++l) {
    LevelCounts& child = levels.back();
    const auto& par = h.parents[l];
    const std::string lname = "level " + std::to_string(l + 2);
    if (static_cast<int>(par.size()) != child.B)
      throw IntegrityError(lname + ": parent map has " + std::to_string(par.size()) +
                           " entries for " + std::to_string(child.B) + " blocks");
    // Compact parent ids in order of first use.
    std::map<int, int> remap;
    for (int p : par) {
      if (p < 0) throw IntegrityError(lname + ": negative parent index");
      remap.emplace(p, 0);
    }
    int next = 0;
    for (auto& kv : remap) kv.second = next++;
    LevelCounts up;
    up.B = next;
    child.parent.resize(par.size());
    std::vector<int> side_set(static_cast<std::size_t>(up.B), -1);
    for (std::size_t r = 0; r < par.size(); ++r) {
      const int p = remap[par[r]];
      child.parent[r] = p;
      const int sd = static_cast<int>(child.side[r]);
      auto& ps = side_set[static_cast<std::size_t>(p)];
      if (ps >= 0 && ps != sd)
        throw IntegrityError(lname + ": block " + std::to_string(p) + " mixes doc and word groups");
      ps = sd;
    }
    up.side.resize(static_cast<std::size_t>(up.B));
    for (int p = 0; p < up.B; ++p) up.side[static_cast<std::size_t>(p)] = static_cast<Side>(side_set[static_cast<std::size_t>(p)]);
    up.e.assign(static_cast<std::size_t>(up.B) * up.B, 0);
    for (int r = 0; r < child.B; ++r)
      for (int s = 0; s < child.B; ++s)
        up.e[idx(child.parent[static_cast<std::size_t>(r)], child.parent[static_cast<std::size_t>(s)], up.B)] +=
            child.e[idx(r, s, child.B)];
    levels.push_back(std::move(up));
  }
  return levels;
}

double level_edge_term(const LevelCounts& child, const LevelCounts& parent) {
  std::vector<double> n(static_cast<std::size_t>(parent.B), 0.0);
  for (int p : child.parent) n[static_cast<std::size_t>(p)] += 1.0;
  double lp = 0.0;
  for (int R = 0; R < parent.B; ++R) {
    const auto nR = n[static_cast<std::size_t>(R)];
    const auto eRR = parent.e[idx(R, R, parent.B)];
    if (eRR > 0) lp -= log_multiset(nR * (nR + 1) / 2.0, static_cast<double>(eRR / 2));
    for (int S = R + 1; S < parent.B; ++S) {
      const auto eRS = parent.e[idx(R, S, parent.B)];
      if (eRS > 0) lp -= log_multiset(nR * n[static_cast<std::size_t>(S)], static_cast<double>(eRS));
    }
  }
  return lp;
}

double level_partition_side(const std::vector<std::int64_t>& sizes) {
  if (sizes.empty()) return 0.0;
  std::int64_t n = 0;
  double lp = 0.0;
  for (auto s : sizes) {
    n += s;
    lp += log_factorial(s);
  }
  const auto Bn = static_cast<double>(sizes.size());
  return lp - log_factorial(n) - log_binom(static_cast<double>(n - 1), Bn - 1) -
         std::log(static_cast<double>(n));
}

double logp_bipartite_partition(const LevelCounts& child, int parent_B, std::string* diagnostic) {
  std::vector<std::int64_t> size(static_cast<std::size_t>(parent_B), 0);
  std::vector<int> sd(static_cast<std::size_t>(parent_B), -1);
  for (std::size_t r = 0; r < child.parent.size(); ++r) {
    const auto p = static_cast<std::size_t>(child.parent[r]);
    const int s = static_cast<int>(child.side[r]);
    if (sd[p] >= 0 && sd[p] != s) {
      if (diagnostic) *diagnostic = "block " + std::to_string(p) + " contains groups of both sides";
      return kNegInf;
    }
    sd[p] = s;
    ++size[p];
  }
  double lp = 0.0;
  for (int side = 0; side < 2; ++side) {
    std::vector<std::int64_t> sizes;
    for (std::size_t p = 0; p < size.size(); ++p)
      if (sd[p] == side && size[p] > 0) sizes.push_back(size[p]);
    lp += level_partition_side(sizes);
  }
  return lp;
}

double top_omega_bar(const LevelCounts& top) {
  if (top.B == 0) return 0.0;
  const auto E = static_cast<double>(edge_total(top.e, top.B));
  return 2.0 * E / (static_cast<double>(top.B) * (top.B + 1));
}

double logp_hierarchy(const std::vector<LevelCounts>& levels) {
  if (levels.empty()) return 0.0;
  double lp = 0.0;
  for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
    const auto& child = levels[l];
    const auto& parent = levels[l + 1];
    const std::string lname = "level " + std::to_string(l + 2);
    if (child.parent.size() != static_cast<std::size_t>(child.B))
      throw IntegrityError(lname + ": missing parent map");
    std::vector<std::int64_t> agg(static_cast<std::size_t>(parent.B) * parent.B, 0);
    for (int r = 0; r < child.B; ++r)
      for (int s = 0; s < child.B; ++s) {
        const int R = child.parent[static_cast<std::size_t>(r)], S = child.parent[static_cast<std::size_t>(s)];
        if (R < 0 || R >= parent.B || S < 0 || S >= parent.B)
          throw IntegrityError(lname + ": parent index out of range");
        agg[idx(R, S, parent.B)] += child.e[idx(r, s, child.B)];
      }
    if (agg != parent.e) throw IntegrityError(lname + ": edge counts do not aggregate from the level below");
    std::string diag;
    const double part = logp_bipartite_partition(child, parent.B, &diag);
    if (part == kNegInf) throw IntegrityError(lname + ": " + diag);
    lp += level_edge_term(child, parent) + part;
  }
  const auto& top = levels.back();
  return lp + logp_e_geometric(top.e, top.B, top_omega_bar(top));
}

std::vector<int> compact_groups(LabeledState& s, Hierarchy& h) {
  std::vector<char> used(static_cast<std::size_t>(s.B), 0);
  for (const auto& b : s.bundles) {
    if (b.count <= 0) continue;
    used.at(static_cast<std::size_t>(b.rd)) = 1;
    used.at(static_cast<std::size_t>(b.rw)) = 1;
  }
  std::vector<int> remap(static_cast<std::size_t>(s.B), -1);
  int next = 0;
  std::vector<Side> side;
  for (int r = 0; r < s.B; ++r)
    if (used[static_cast<std::size_t>(r)]) {
      remap[static_cast<std::size_t>(r)] = next++;
      side.push_back(s.side_of_group[static_cast<std::size_t>(r)]);
    }
  for (auto& b : s.bundles) {
    if (b.count <= 0) continue;
    b.rd = remap[static_cast<std::size_t>(b.rd)];
    b.rw = remap[static_cast<std::size_t>(b.rw)];
  }
  std::erase_if(s.bundles, [](const LabeledBundle& b) { return b.count <= 0; });
  s.B = next;
  s.side_of_group = std::move(side);

  std::vector<int> cur = remap;  // old level-l id -> new, -1 if dropped
  for (auto& par : h.parents) {
    if (par.size() < cur.size())
      throw IntegrityError("hierarchy parent map does not cover the blocks below");
    par.resize(cur.size());
    int nb = 0;
    for (int x : cur) nb = std::max(nb, x + 1);
    std::vector<int> compact_par(static_cast<std::size_t>(nb), -1);
    int maxp = -1;
    for (std::size_t r = 0; r < par.size(); ++r) {
      if (cur[r] >= 0) compact_par[static_cast<std::size_t>(cur[r])] = par[r];
      maxp = std::max(maxp, par[r]);
    }
    std::vector<int> up(static_cast<std::size_t>(maxp + 1), -1);
    std::vector<char> up_used(up.size(), 0);
    for (int p : compact_par)
      if (p >= 0) up_used[static_cast<std::size_t>(p)] = 1;
    int np = 0;
    for (std::size_t p = 0; p < up.size(); ++p)
      if (up_used[p]) up[p] = np++;
    for (int& p : compact_par) p = up[static_cast<std::size_t>(p)];
    par = std::move(compact_par);
    cur = std::move(up);
  }
  return remap;
}

ModelScore joint_logp(const BipartiteMultigraph& g, const LabeledState& state, const Hierarchy& hier,
                      const JointOptions& opt) {
  LabeledState s = state;
  Hierarchy h = hier;
  canonicalize(s);
  validate_state(g, s);
  compact_groups(s, h);
  const auto m = to_multigraph(g, s);
  const auto c = derive_counts(m);

  ModelScore score;
  score.model_id = "hsbm";
  score.add("adjacency", -logp_graph_given_ke(m, c));

  for (int side = 0; side < 2; ++side) {
    const int lo = side == 0 ? 0 : g.D;
    const int hi = side == 0 ? g.D : g.num_nodes();
    std::vector<std::vector<std::pair<int, std::int64_t>>> k(c.k.begin() + lo, c.k.begin() + hi);
    OverlappingPartition op;
    op.Q = opt.Q;
    for (int r = 0; r < s.B; ++r)
      if (static_cast<int>(s.side_of_group[static_cast<std::size_t>(r)]) == side) ++op.B;
    // Per-side group ids for the mixture keys.
    std::vector<int> local(static_cast<std::size_t>(s.B), -1);
    int nxt = 0;
    for (int r = 0; r < s.B; ++r)
      if (static_cast<int>(s.side_of_group[static_cast<std::size_t>(r)]) == side) local[static_cast<std::size_t>(r)] = nxt++;
    for (const auto& ki : k) {
      if (ki.empty()) continue;
      std::vector<int> mix;
      for (const auto& kv : ki) mix.push_back(local[static_cast<std::size_t>(kv.first)]);
      ++op.mixtures[mix];
      ++op.N;
    }
    const char* name = side == 0 ? "doc" : "word";
    score.add(std::string("degrees_") + name, -logp_k_given_eb(k));
    score.add(std::string("partition_") + name, -logp_overlap_partition(op));
  }

  const auto levels = build_levels(s.B, s.side_of_group, c.e, h);
  for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
    std::string diag;
    const double part = logp_bipartite_partition(levels[l], levels[l + 1].B, &diag);
    if (part == kNegInf) throw IntegrityError("level " + std::to_string(l + 2) + ": " + diag);
    score.add("edges_l" + std::to_string(l + 1), -level_edge_term(levels[l], levels[l + 1]));
    score.add("partition_l" + std::to_string(l + 1), -part);
  }
  const auto& top = levels.back();
  score.add("edges_top", -logp_e_geometric(top.e, top.B, top_omega_bar(top)));
  score.parametrization = "B=" + std::to_string(s.B) + ",L=" + std::to_string(levels.size()) +
                          ",Q=" + std::to_string(opt.Q);
  return score;
}

}  // namespace topicblocks
