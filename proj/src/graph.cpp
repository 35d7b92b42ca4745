#include "topicblocks/graph.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <tuple>

#include "topicblocks/util/error.hpp"

namespace topicblocks {

BipartiteMultigraph make_graph(int D, int V, std::vector<CountEntry> edges) {
  BipartiteMultigraph g;
  g.D = D;
  g.V = V;
  std::sort(edges.begin(), edges.end(), [](const CountEntry& a, const CountEntry& b) {
    return std::pair(a.doc, a.word) < std::pair(b.doc, b.word);
  });
  g.doc_degree.assign(static_cast<std::size_t>(D), 0);
  g.word_degree.assign(static_cast<std::size_t>(V), 0);
  for (const auto& e : edges) {
    if (e.doc < 0 || e.doc >= D || e.word < 0 || e.word >= V)
      throw InvalidInput("edge endpoint out of range");
    if (e.count < 0) throw InvalidInput("negative edge multiplicity");
    if (e.count == 0) continue;
    if (!g.edges.empty() && g.edges.back().doc == e.doc && g.edges.back().word == e.word)
      g.edges.back().count += e.count;
    else
      g.edges.push_back(e);
    g.E += e.count;
    g.doc_degree[static_cast<std::size_t>(e.doc)] += e.count;
    g.word_degree[static_cast<std::size_t>(e.word)] += e.count;
  }
  return g;
}

BipartiteMultigraph from_counts(const Corpus& corpus) {
  return make_graph(corpus.num_docs(), corpus.num_words(), corpus.counts);
}

void canonicalize(LabeledState& s) {
  auto key = [](const LabeledBundle& b) { return std::tie(b.d, b.w, b.rd, b.rw); };
  std::sort(s.bundles.begin(), s.bundles.end(),
            [&](const LabeledBundle& a, const LabeledBundle& b) { return key(a) < key(b); });
  std::vector<LabeledBundle> out;
  out.reserve(s.bundles.size());
  for (const auto& b : s.bundles) {
    if (b.count == 0) continue;
    if (!out.empty() && key(out.back()) == key(b))
      out.back().count += b.count;
    else
      out.push_back(b);
  }
  s.bundles = std::move(out);
}

void validate_state(const BipartiteMultigraph& g, const LabeledState& s) {
  if (static_cast<int>(s.side_of_group.size()) != s.B)
    throw IntegrityError("side_of_group has " + std::to_string(s.side_of_group.size()) +
                         " entries for B=" + std::to_string(s.B));
  std::map<std::pair<int, int>, std::int64_t> mass;
  for (const auto& b : s.bundles) {
    const std::string where = "(" + std::to_string(b.d) + "," + std::to_string(b.w) + ")";
    if (b.d < 0 || b.d >= g.D || b.w < 0 || b.w >= g.V)
      throw IntegrityError("bundle " + where + " outside the graph");
    if (b.count < 0) throw IntegrityError("negative bundle count at " + where);
    if (b.rd < 0 || b.rd >= s.B || b.rw < 0 || b.rw >= s.B)
      throw IntegrityError("bundle " + where + " has group index out of range");
    if (s.side_of_group[static_cast<std::size_t>(b.rd)] != Side::Doc ||
        s.side_of_group[static_cast<std::size_t>(b.rw)] != Side::Word)
      throw IntegrityError("bundle " + where + " labels a half-edge with a group of the other side");
    mass[{b.d, b.w}] += b.count;
  }
  for (const auto& e : g.edges) {
    auto it = mass.find({e.doc, e.word});
    const std::int64_t m = it == mass.end() ? 0 : it->second;
    if (m != e.count)
      throw IntegrityError("label sum mismatch at (" + std::to_string(e.doc) + "," +
                           std::to_string(e.word) + "): labels " + std::to_string(m) +
                           ", edges " + std::to_string(e.count));
    if (it != mass.end()) mass.erase(it);
  }
  for (const auto& [key, m] : mass)
    if (m != 0)
      throw IntegrityError("label sum mismatch at (" + std::to_string(key.first) + "," +
                           std::to_string(key.second) + "): labels " + std::to_string(m) +
                           ", edges 0");
}

LabeledMultigraph to_multigraph(const BipartiteMultigraph& g, const LabeledState& s) {
  LabeledMultigraph m;
  m.N = g.num_nodes();
  m.B = s.B;
  m.bundles.reserve(s.bundles.size());
  for (const auto& b : s.bundles)
    if (b.count > 0) m.bundles.push_back({b.d, g.word_node(b.w), b.rd, b.rw, b.count});
  return m;
}

std::vector<HalfEdgeBundle> canonical_entries(const LabeledMultigraph& m) {
  std::vector<HalfEdgeBundle> out;
  out.reserve(m.bundles.size());
  for (auto b : m.bundles) {
    if (b.count == 0) continue;
    if (b.i < 0 || b.j < 0 || b.i >= m.N || b.j >= m.N) throw IntegrityError("node index out of range");
    if (b.r < 0 || b.s < 0 || b.r >= m.B || b.s >= m.B) throw IntegrityError("group index out of range");
    if (b.count < 0) throw IntegrityError("negative edge count");
    if (b.i > b.j || (b.i == b.j && b.r > b.s)) {
      std::swap(b.i, b.j);
      std::swap(b.r, b.s);
    }
    out.push_back(b);
  }
  auto key = [](const HalfEdgeBundle& b) { return std::tie(b.i, b.j, b.r, b.s); };
  std::sort(out.begin(), out.end(),
            [&](const HalfEdgeBundle& a, const HalfEdgeBundle& b) { return key(a) < key(b); });
  std::vector<HalfEdgeBundle> merged;
  for (const auto& b : out) {
    if (!merged.empty() && key(merged.back()) == key(b))
      merged.back().count += b.count;
    else
      merged.push_back(b);
  }
  return merged;
}

DerivedCounts derive_counts(const LabeledMultigraph& m) {
  DerivedCounts c;
  c.B = m.B;
  const auto B = static_cast<std::size_t>(m.B);
  c.e.assign(B * B, 0);
  c.e_r.assign(B, 0);
  std::vector<std::map<int, std::int64_t>> k(static_cast<std::size_t>(m.N));
  for (const auto& b : canonical_entries(m)) {
    const auto r = static_cast<std::size_t>(b.r), s = static_cast<std::size_t>(b.s);
    c.E += b.count;
    if (r == s) {
      c.e[r * B + r] += 2 * b.count;
    } else {
      c.e[r * B + s] += b.count;
      c.e[s * B + r] += b.count;
    }
    k[static_cast<std::size_t>(b.i)][b.r] += b.count;
    k[static_cast<std::size_t>(b.j)][b.s] += b.count;
  }
  for (std::size_t r = 0; r < B; ++r)
    for (std::size_t s = 0; s < B; ++s) c.e_r[r] += c.e[r * B + s];
  c.k.resize(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) c.k[i].assign(k[i].begin(), k[i].end());
  return c;
}

DerivedCounts derive_counts(const BipartiteMultigraph& g, const LabeledState& s) {
  validate_state(g, s);
  return derive_counts(to_multigraph(g, s));
}

double poisson_sbm_loglik(const LabeledMultigraph& m, const MixedMembershipParams& p) {
  const auto B = static_cast<std::size_t>(m.B);
  if (p.kappa.rows != static_cast<std::size_t>(m.N) || p.kappa.cols != B || p.omega.rows != B ||
      p.omega.cols != B)
    throw InvalidInput("poisson_sbm_loglik: parameter dimensions do not match the graph");
  double logp = 0.0;
  for (const auto& b : canonical_entries(m)) {
    const auto i = static_cast<std::size_t>(b.i), j = static_cast<std::size_t>(b.j);
    const auto r = static_cast<std::size_t>(b.r), s = static_cast<std::size_t>(b.s);
    double mean = p.kappa(i, r) * p.omega(r, s) * p.kappa(j, s);
    if (i == j && r == s) mean /= 2.0;
    if (!(mean > 0)) return kNegInf;
    logp += static_cast<double>(b.count) * std::log(mean) - log_factorial(b.count);
  }
  std::vector<double> u(B, 0.0);
  for (std::size_t i = 0; i < p.kappa.rows; ++i)
    for (std::size_t r = 0; r < B; ++r) u[r] += p.kappa(i, r);
  double total = 0.0;
  for (std::size_t r = 0; r < B; ++r)
    for (std::size_t s = 0; s < B; ++s) total += u[r] * p.omega(r, s) * u[s];
  return logp - total / 2.0;
}

PlsiSbmParams plsi_to_sbm_params(const std::vector<double>& eta_d, const Matrix& theta,
                                 const Matrix& phi) {
  if (theta.rows != eta_d.size() || theta.cols != phi.rows)
    throw InvalidInput("plsi_to_sbm_params: dimension mismatch");
  PlsiSbmParams p;
  p.eta_d = eta_d;
  p.theta = theta;
  const std::size_t K = phi.rows, V = phi.cols;
  p.eta_w.assign(V, 0.0);
  p.unreachable.assign(V, 0);
  p.phi_prime = Matrix(V, K, 0.0);
  for (std::size_t w = 0; w < V; ++w) {
    double s = 0.0;
    for (std::size_t r = 0; r < K; ++r) s += phi(r, w);
    p.eta_w[w] = s;
    if (s == 0.0) {
      p.unreachable[w] = 1;
      continue;
    }
    for (std::size_t r = 0; r < K; ++r) p.phi_prime(w, r) = phi(r, w) / s;
  }
  return p;
}

double poisson_product_loglik(const std::vector<TopicCount>& labels, const PlsiSbmParams& p) {
  std::vector<TopicCount> l = labels;
  auto key = [](const TopicCount& t) { return std::tie(t.d, t.w, t.r); };
  std::sort(l.begin(), l.end(), [&](const TopicCount& a, const TopicCount& b) { return key(a) < key(b); });
  double logp = 0.0;
  for (std::size_t i = 0; i < l.size();) {
    std::int64_t n = 0;
    std::size_t j = i;
    while (j < l.size() && key(l[j]) == key(l[i])) n += l[j++].count;
    if (n > 0) {
      const double lam = p.lambda(l[i].d, l[i].w, l[i].r);
      if (!(lam > 0)) return kNegInf;
      logp += static_cast<double>(n) * std::log(lam) - log_factorial(n);
    }
    i = j;
  }
  const std::size_t K = p.theta.cols, V = p.eta_w.size();
  std::vector<double> word_mass(K, 0.0);
  for (std::size_t w = 0; w < V; ++w)
    for (std::size_t r = 0; r < K; ++r) word_mass[r] += p.eta_w[w] * p.phi_prime(w, r);
  double total = 0.0;
  for (std::size_t d = 0; d < p.eta_d.size(); ++d)
    for (std::size_t r = 0; r < K; ++r) total += p.eta_d[d] * p.theta(d, r) * word_mass[r];
  return logp - total;
}

}  // namespace topicblocks
