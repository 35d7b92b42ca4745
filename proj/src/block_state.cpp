#include "topicblocks/block_state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "topicblocks/partitions.hpp"
#include "topicblocks/util/error.hpp"
#include "topicblocks/util/math.hpp"

namespace topicblocks {

namespace {

std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

double lf(std::int64_t n) { return log_factorial(n); }

double geometric_cost(std::int64_t E, std::int64_t B) {
  const double cells = static_cast<double>(B) * static_cast<double>(B + 1) / 2.0;
  if (E == 0 || B == 0) return 0.0;
  const double wbar = static_cast<double>(E) / cells;
  return -(static_cast<double>(E) * std::log(wbar) - (static_cast<double>(E) + cells) * std::log1p(wbar));
}

double partition_side_cost(const std::vector<std::int64_t>& sizes) {
  return -level_partition_side(sizes);
}

}  // namespace

double cached_log_partitions(std::int64_t m, std::int64_t n) {
  if (m <= partition_table_threshold() + n || n >= (1 << 24) || m >= (std::int64_t{1} << 39))
    return log_count_partitions(m, n);
  thread_local std::unordered_map<std::uint64_t, double> memo;
  const std::uint64_t key = (static_cast<std::uint64_t>(m) << 24) | static_cast<std::uint64_t>(n);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  if (memo.size() > (1u << 22)) memo.clear();
  const double v = log_count_partitions(m, n);
  memo.emplace(key, v);
  return v;
}

std::size_t BlockState::VecHash::operator()(const std::vector<int>& v) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int x : v) {
    h ^= static_cast<std::uint32_t>(x);
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

BlockState::BlockState(const BipartiteMultigraph& g, const LabeledState& s0, const Hierarchy& h,
                       StateOptions opt)
    : g_(&g), opt_(opt) {
  LabeledState s = s0;
  canonicalize(s);
  validate_state(g, s);
  groups_.resize(static_cast<std::size_t>(s.B));
  ers_.resize(static_cast<std::size_t>(s.B));
  for (int r = 0; r < s.B; ++r) groups_[static_cast<std::size_t>(r)].side = s.side_of_group[static_cast<std::size_t>(r)];
  const int N = g.num_nodes();
  node_edges_.resize(static_cast<std::size_t>(N));
  node_deg_.resize(static_cast<std::size_t>(N));
  node_mix_.assign(static_cast<std::size_t>(N), nullptr);
  labels_.resize(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    node_edges_[static_cast<std::size_t>(g.edges[e].doc)].push_back(static_cast<int>(e));
    node_edges_[static_cast<std::size_t>(g.word_node(g.edges[e].word))].push_back(static_cast<int>(e));
  }
  for (int side = 0; side < 2; ++side) n_q_[side].assign(2, 0);

  // parents for the full capacity
  if (!h.parents.empty()) {
    if (static_cast<int>(h.parents[0].size()) != s.B)
      throw IntegrityError("level 2 parent map has " + std::to_string(h.parents[0].size()) +
                           " entries for B=" + std::to_string(s.B));
  }
  parents_ = h.parents;
  assign_block_sides();
  level_e_.resize(parents_.size());
  level_n_.resize(parents_.size());
  for (std::size_t k = 0; k < parents_.size(); ++k)
    level_n_[k].assign(block_side_[k].size(), 0);

  // empty state, then add the labels
  hier_dirty_ = true;
  for (const auto& b : s.bundles) {
    const auto& edges = node_edges_[static_cast<std::size_t>(b.d)];
    int eidx = -1;
    for (int e : edges)
      if (g.edges[static_cast<std::size_t>(e)].word == b.w) {
        eidx = e;
        break;
      }
    add_label(eidx, b.rd, b.rw, b.count);
  }
  resync();
}

void BlockState::assign_block_sides() {
  block_side_.assign(parents_.size(), {});
  std::vector<char> known(groups_.size(), 1);
  for (std::size_t k = 0; k < parents_.size(); ++k) {
    const std::size_t nchild = k == 0 ? groups_.size() : block_side_[k - 1].size();
    if (parents_[k].size() < nchild)
      throw IntegrityError("level " + std::to_string(k + 2) + ": parent map has " +
                           std::to_string(parents_[k].size()) + " entries for " + std::to_string(nchild) +
                           " blocks");
    int nb = 0;
    for (int p : parents_[k]) {
      if (p < 0) throw IntegrityError("level " + std::to_string(k + 2) + ": negative parent index");
      nb = std::max(nb, p + 1);
    }
    if (k + 1 < parents_.size()) nb = std::max(nb, static_cast<int>(parents_[k + 1].size()));
    std::vector<int> seen(static_cast<std::size_t>(nb), -1);
    for (std::size_t c = 0; c < nchild; ++c) {
      if (!known[c]) continue;
      const Side cs = k == 0 ? groups_[c].side : block_side_[k - 1][c];
      auto& sd = seen[static_cast<std::size_t>(parents_[k][c])];
      if (sd >= 0 && sd != static_cast<int>(cs))
        throw IntegrityError("level " + std::to_string(k + 2) + ": block " + std::to_string(parents_[k][c]) +
                             " mixes doc and word groups");
      sd = static_cast<int>(cs);
    }
    block_side_[k].resize(static_cast<std::size_t>(nb));
    known.assign(static_cast<std::size_t>(nb), 0);
    for (int b = 0; b < nb; ++b) {
      const int sd = seen[static_cast<std::size_t>(b)];
      block_side_[k][static_cast<std::size_t>(b)] = sd == 1 ? Side::Word : Side::Doc;
      known[static_cast<std::size_t>(b)] = sd >= 0;
    }
  }
}

std::int64_t BlockState::node_degree(int i) const {
  const auto u = static_cast<std::size_t>(i);
  return i < g_->D ? g_->doc_degree[u] : g_->word_degree[u - static_cast<std::size_t>(g_->D)];
}

std::vector<int> BlockState::groups_of(Side s, bool nonempty_only) const {
  std::vector<int> out;
  for (int r = 0; r < capacity(); ++r)
    if (side_of(r) == s && (!nonempty_only || !empty_group(r))) out.push_back(r);
  return out;
}

std::int64_t BlockState::ers(int r, int s) const {
  const auto& m = ers_[static_cast<std::size_t>(r)];
  auto it = m.find(s);
  return it == m.end() ? 0 : it->second;
}

int BlockState::level_size(int l) const {
  if (l == 1) return capacity();
  return static_cast<int>(block_side_[static_cast<std::size_t>(l - 2)].size());
}

Side BlockState::level_side(int l, int r) const {
  if (l == 1) return side_of(r);
  return block_side_[static_cast<std::size_t>(l - 2)][static_cast<std::size_t>(r)];
}

// ---------------------------------------------------------------------------
// cost pieces

double BlockState::comp_cost(const Comp& c, std::int64_t n) const {
  return cached_log_partitions(c.e, n) - c.slh + lf(n);
}

double BlockState::group_cost(const Group& g) const {
  if (g.m == 0) return 0.0;
  return log_binom(static_cast<double>(g.e - g.S + g.m - 1), static_cast<double>(g.m - 1));
}

double BlockState::side_cost(int side) const {
  const std::int64_t N = n_active_[side];
  if (N == 0) return 0.0;
  const int B = b_side_[side];
  int Qe = opt_.Q <= 0 ? B : std::min(opt_.Q, B);
  const int maxq = static_cast<int>(n_q_[side].size()) - 1;
  for (int q = maxq; q > Qe; --q)
    if (n_q_[side][static_cast<std::size_t>(q)] > 0) {
      Qe = q;  // infeasible, tracked by q_violations_
      break;
    }
  double c = log_binom(static_cast<double>(N + Qe - 1), static_cast<double>(N)) + lf(N);
  for (std::size_t q = 1; q < n_q_[side].size(); ++q) {
    const auto nq = n_q_[side][q];
    if (nq == 0) continue;
    c += log_multiset_logn(log_binom(B, static_cast<double>(q)), nq);
  }
  return c - slf_nb_[side];
}

std::vector<int> BlockState::ancestors(int r) const {
  std::vector<int> a(parents_.size());
  int cur = r;
  for (std::size_t k = 0; k < parents_.size(); ++k) {
    cur = parents_[k][static_cast<std::size_t>(cur)];
    a[k] = cur;
  }
  return a;
}

double BlockState::hier_full() const {
  // nonempty flags per level
  std::vector<char> ne(groups_.size());
  for (std::size_t r = 0; r < groups_.size(); ++r) ne[r] = groups_[r].e > 0;
  double cost = 0.0;
  std::int64_t B_top = 0;
  for (const char x : ne) B_top += x;
  auto& level_n = const_cast<std::vector<std::vector<std::int64_t>>&>(level_n_);
  for (std::size_t k = 0; k < parents_.size(); ++k) {
    auto& n = level_n[k];
    n.assign(block_side_[k].size(), 0);
    for (std::size_t c = 0; c < parents_[k].size(); ++c)
      if (ne[c]) ++n[static_cast<std::size_t>(parents_[k][c])];
    for (const auto& [key, cnt] : level_e_[k]) {
      if (cnt == 0) continue;
      const auto R = static_cast<std::size_t>(key >> 32), S = static_cast<std::size_t>(key & 0xffffffffu);
      if (R == S)
        cost += log_multiset(static_cast<double>(n[R]) * static_cast<double>(n[R] + 1) / 2.0,
                             static_cast<double>(cnt / 2));
      else
        cost += log_multiset(static_cast<double>(n[R]) * static_cast<double>(n[S]), static_cast<double>(cnt));
    }
    for (int side = 0; side < 2; ++side) {
      std::vector<std::int64_t> sizes;
      for (std::size_t R = 0; R < n.size(); ++R)
        if (n[R] > 0 && static_cast<int>(block_side_[k][R]) == side) sizes.push_back(n[R]);
      cost += partition_side_cost(sizes);
    }
    std::vector<char> up(n.size());
    B_top = 0;
    for (std::size_t R = 0; R < n.size(); ++R) {
      up[R] = n[R] > 0;
      B_top += up[R];
    }
    ne = std::move(up);
  }
  return cost + geometric_cost(g_->E, B_top);
}

// ---------------------------------------------------------------------------
// primitives

void BlockState::add_member(int r, int i) {
  auto& g = groups_[static_cast<std::size_t>(r)];
  g.member_pos[i] = static_cast<int>(g.member_list.size());
  g.member_list.push_back(i);
}

void BlockState::remove_member(int r, int i) {
  auto& g = groups_[static_cast<std::size_t>(r)];
  auto it = g.member_pos.find(i);
  const int pos = it->second;
  const int last = g.member_list.back();
  g.member_list[static_cast<std::size_t>(pos)] = last;
  g.member_pos[last] = pos;
  g.member_list.pop_back();
  g.member_pos.erase(i);
}

double BlockState::node_leave_mix(int i) {
  Mix* m = node_mix_[static_cast<std::size_t>(i)];
  if (!m) return 0.0;
  const int side = static_cast<int>(node_side(i));
  double d = -side_cost(side);
  for (std::size_t j = 0; j < m->key.size(); ++j) {
    d -= comp_cost(m->comps[j], m->n);
    d -= group_cost(groups_[static_cast<std::size_t>(m->key[j])]);
  }
  const auto& deg = node_deg_[static_cast<std::size_t>(i)];
  for (std::size_t j = 0; j < m->key.size(); ++j) {
    auto& c = m->comps[j];
    const std::int64_t k = deg[j].second;
    auto it = c.hist.find(k);
    c.slh -= std::log(static_cast<double>(it->second));
    if (--it->second == 0) c.hist.erase(it);
    c.e -= k;
    groups_[static_cast<std::size_t>(m->key[j])].S -= 1;
  }
  slf_nb_[side] -= std::log(static_cast<double>(m->n));
  m->n -= 1;
  const std::size_t q = m->key.size();
  n_q_[side][q] -= 1;
  n_active_[side] -= 1;
  if (opt_.Q > 0 && static_cast<int>(q) > opt_.Q) --q_violations_;
  node_mix_[static_cast<std::size_t>(i)] = nullptr;
  const std::vector<int> key = m->key;
  if (m->n == 0) {
    for (int r : key) groups_[static_cast<std::size_t>(r)].m -= 1;
    mixes_[side].erase(key);
    m = nullptr;
  }
  if (m)
    for (std::size_t j = 0; j < key.size(); ++j) d += comp_cost(m->comps[j], m->n);
  for (int r : key) d += group_cost(groups_[static_cast<std::size_t>(r)]);
  d += side_cost(side);
  return d;
}

double BlockState::node_join_mix(int i) {
  const auto& deg = node_deg_[static_cast<std::size_t>(i)];
  if (deg.empty()) return 0.0;
  const int side = static_cast<int>(node_side(i));
  std::vector<int> key(deg.size());
  for (std::size_t j = 0; j < deg.size(); ++j) key[j] = deg[j].first;
  double d = -side_cost(side);
  for (int r : key) d -= group_cost(groups_[static_cast<std::size_t>(r)]);
  auto [it, inserted] = mixes_[side].try_emplace(key);
  Mix& m = it->second;
  if (inserted) {
    m.key = key;
    m.comps.resize(key.size());
    for (int r : key) groups_[static_cast<std::size_t>(r)].m += 1;
  } else {
    for (std::size_t j = 0; j < key.size(); ++j) d -= comp_cost(m.comps[j], m.n);
  }
  m.n += 1;
  slf_nb_[side] += std::log(static_cast<double>(m.n));
  for (std::size_t j = 0; j < key.size(); ++j) {
    auto& c = m.comps[j];
    const std::int64_t k = deg[j].second;
    auto& h = c.hist[k];
    h += 1;
    c.slh += std::log(static_cast<double>(h));
    c.e += k;
    groups_[static_cast<std::size_t>(key[j])].S += 1;
  }
  const std::size_t q = key.size();
  if (n_q_[side].size() <= q) n_q_[side].resize(q + 1, 0);
  n_q_[side][q] += 1;
  n_active_[side] += 1;
  if (opt_.Q > 0 && static_cast<int>(q) > opt_.Q) ++q_violations_;
  node_mix_[static_cast<std::size_t>(i)] = &m;
  for (std::size_t j = 0; j < key.size(); ++j) d += comp_cost(m.comps[j], m.n);
  for (int r : key) d += group_cost(groups_[static_cast<std::size_t>(r)]);
  d += side_cost(side);
  return d;
}

double BlockState::change_node(int i, int r, std::int64_t delta) {
  auto& deg = node_deg_[static_cast<std::size_t>(i)];
  auto pos = std::lower_bound(deg.begin(), deg.end(), r,
                              [](const std::pair<int, std::int64_t>& a, int b) { return a.first < b; });
  const bool present = pos != deg.end() && pos->first == r;
  const std::int64_t kold = present ? pos->second : 0;
  const std::int64_t knew = kold + delta;
  if (knew < 0) throw IntegrityError("negative degree of node " + std::to_string(i) + " in group " + std::to_string(r));
  double d = -(lf(knew) - lf(kold));
  if (kold > 0 && knew > 0) {
    Mix* m = node_mix_[static_cast<std::size_t>(i)];
    const auto j = static_cast<std::size_t>(pos - deg.begin());
    auto& c = m->comps[j];
    d -= comp_cost(c, m->n);
    auto it = c.hist.find(kold);
    c.slh -= std::log(static_cast<double>(it->second));
    if (--it->second == 0) c.hist.erase(it);
    auto& h = c.hist[knew];
    h += 1;
    c.slh += std::log(static_cast<double>(h));
    c.e += delta;
    pos->second = knew;
    d += comp_cost(c, m->n);
    return d;
  }
  d += node_leave_mix(i);
  if (kold == 0) {
    deg.insert(pos, {r, knew});
    add_member(r, i);
  } else {
    deg.erase(pos);
    remove_member(r, i);
  }
  d += node_join_mix(i);
  return d;
}

double BlockState::change_group_e(int r, std::int64_t delta) {
  auto& g = groups_[static_cast<std::size_t>(r)];
  const std::int64_t eold = g.e, enew = eold + delta;
  double d = lf(enew) - lf(eold);
  const bool flip = (eold == 0) != (enew == 0);
  const int side = static_cast<int>(g.side);
  if (flip) d -= side_cost(side);
  d -= group_cost(g);
  g.e = enew;
  d += group_cost(g);
  if (flip) {
    b_side_[side] += enew > 0 ? 1 : -1;
    d += side_cost(side);
    hier_dirty_ = true;
  }
  return d;
}

double BlockState::change_ers(int r, int s, std::int64_t delta) {
  auto& a = ers_[static_cast<std::size_t>(r)][s];
  const std::int64_t old = a, nw = old + delta;
  a = nw;
  if (nw == 0) ers_[static_cast<std::size_t>(r)].erase(s);
  if (r != s) {
    auto& b = ers_[static_cast<std::size_t>(s)][r];
    b = nw;
    if (nw == 0) ers_[static_cast<std::size_t>(s)].erase(r);
  }
  double d = -(lf(nw) - lf(old));
  int cr = r, cs = s;
  for (std::size_t k = 0; k < parents_.size(); ++k) {
    cr = parents_[k][static_cast<std::size_t>(cr)];
    cs = parents_[k][static_cast<std::size_t>(cs)];
    const std::uint64_t key = pair_key(cr, cs);
    auto& v = level_e_[k][key];
    const std::int64_t lo = v;
    v += cr == cs ? 2 * delta : delta;
    const std::int64_t ln = v;
    if (ln == 0) level_e_[k].erase(key);
    if (!hier_dirty_) {
      const auto& n = level_n_[k];
      if (cr == cs) {
        const double cells = static_cast<double>(n[static_cast<std::size_t>(cr)]) *
                             static_cast<double>(n[static_cast<std::size_t>(cr)] + 1) / 2.0;
        hier_cost_ += log_multiset(cells, static_cast<double>(ln / 2)) - log_multiset(cells, static_cast<double>(lo / 2));
      } else {
        const double cells = static_cast<double>(n[static_cast<std::size_t>(cr)]) *
                             static_cast<double>(n[static_cast<std::size_t>(cs)]);
        hier_cost_ += log_multiset(cells, static_cast<double>(ln)) - log_multiset(cells, static_cast<double>(lo));
      }
    }
  }
  return d;
}

double BlockState::add_label(int e, int rd, int rw, std::int64_t delta) {
  auto& ls = labels_[static_cast<std::size_t>(e)];
  auto it = std::find_if(ls.begin(), ls.end(), [&](const Mass& m) { return m.rd == rd && m.rw == rw; });
  const std::int64_t cold = it == ls.end() ? 0 : it->c;
  const std::int64_t cnew = cold + delta;
  if (cnew < 0) throw IntegrityError("negative label mass on edge " + std::to_string(e));
  double d = lf(cnew) - lf(cold);
  if (it == ls.end())
    ls.push_back({rd, rw, cnew});
  else if (cnew == 0)
    ls.erase(it);
  else
    it->c = cnew;
  const auto& ed = g_->edges[static_cast<std::size_t>(e)];
  const int di = ed.doc, wi = g_->word_node(ed.word);
  if (delta > 0) {
    d += change_group_e(rd, delta);
    d += change_group_e(rw, delta);
    d += change_node(di, rd, delta);
    d += change_node(wi, rw, delta);
  } else {
    d += change_node(di, rd, delta);
    d += change_node(wi, rw, delta);
    d += change_group_e(rd, delta);
    d += change_group_e(rw, delta);
  }
  d += change_ers(rd, rw, delta);
  return d;
}

double BlockState::move_mass(int e, int rd, int rw, int nrd, int nrw, std::int64_t amount) {
  if (amount == 0 || (rd == nrd && rw == nrw)) return 0.0;
  const double h0 = hier_cost_;
  double d = add_label(e, nrd, nrw, amount);
  d += add_label(e, rd, rw, -amount);
  if (hier_dirty_) {
    hier_cost_ = hier_full();
    hier_dirty_ = false;
  }
  d += hier_cost_ - h0;
  sigma_ += d;
  if (recording_) journal_.push_back({e, rd, rw, nrd, nrw, amount});
  return d;
}

// ---------------------------------------------------------------------------
// transactions

void BlockState::begin() {
  recording_ = true;
  journal_.clear();
  saved_sigma_ = sigma_;
  saved_hier_ = hier_cost_;
  saved_parents_valid_ = false;
}

void BlockState::commit() {
  recording_ = false;
  journal_.clear();
  saved_parents_valid_ = false;
}

void BlockState::rollback() {
  recording_ = false;
  if (saved_parents_valid_) {
    for (std::size_t k = 0; k < saved_parents_.size() && k < parents_.size(); ++k)
      for (std::size_t i = 0; i < saved_parents_[k].size(); ++i) parents_[k][i] = saved_parents_[k][i];
    for (auto& m : level_e_) m.clear();
    for (std::size_t r = 0; r < groups_.size(); ++r) {
      if (groups_[r].side != Side::Doc) continue;
      for (const auto& [s, c] : ers_[r]) {
        int cr = static_cast<int>(r), cs = s;
        for (std::size_t k = 0; k < parents_.size(); ++k) {
          cr = parents_[k][static_cast<std::size_t>(cr)];
          cs = parents_[k][static_cast<std::size_t>(cs)];
          level_e_[k][pair_key(cr, cs)] += cr == cs ? 2 * c : c;
        }
      }
    }
    hier_dirty_ = true;
  }
  for (auto it = journal_.rbegin(); it != journal_.rend(); ++it)
    move_mass(it->e, it->nrd, it->nrw, it->rd, it->rw, it->amount);
  if (hier_dirty_) {
    hier_cost_ = hier_full();
    hier_dirty_ = false;
  }
  journal_.clear();
  saved_parents_valid_ = false;
  sigma_ = saved_sigma_;
  hier_cost_ = saved_hier_;
}

// ---------------------------------------------------------------------------
// totals

double BlockState::resync() {
  double s = 0.0;
  for (std::size_t r = 0; r < groups_.size(); ++r) {
    const auto& g = groups_[r];
    s += lf(g.e) + group_cost(g);
    for (const auto& [t, c] : ers_[r])
      if (static_cast<int>(r) < t)
        s -= lf(c);
      else if (static_cast<int>(r) == t)
        s -= log_double_factorial_even(c);
  }
  for (const auto& deg : node_deg_)
    for (const auto& kv : deg) s -= lf(kv.second);
  for (const auto& ls : labels_)
    for (const auto& m : ls) s += lf(m.c);
  for (int side = 0; side < 2; ++side) {
    for (const auto& kv : mixes_[side])
      for (const auto& c : kv.second.comps) s += comp_cost(c, kv.second.n);
    s += side_cost(side);
  }
  for (auto& m : level_e_) m.clear();
  for (std::size_t r = 0; r < groups_.size(); ++r) {
    if (groups_[r].side != Side::Doc) continue;
    for (const auto& [t, c] : ers_[r]) {
      int cr = static_cast<int>(r), cs = t;
      for (std::size_t k = 0; k < parents_.size(); ++k) {
        cr = parents_[k][static_cast<std::size_t>(cr)];
        cs = parents_[k][static_cast<std::size_t>(cs)];
        level_e_[k][pair_key(cr, cs)] += cr == cs ? 2 * c : c;
      }
    }
  }
  hier_cost_ = hier_full();
  hier_dirty_ = false;
  sigma_ = s + hier_cost_;
  return sigma_;
}

ModelScore BlockState::full_score() const {
  return joint_logp(*g_, export_state(), export_hierarchy(), JointOptions{opt_.Q});
}

LabeledState BlockState::export_state() const {
  LabeledState s;
  s.B = capacity();
  s.side_of_group.reserve(groups_.size());
  for (const auto& g : groups_) s.side_of_group.push_back(g.side);
  for (std::size_t e = 0; e < labels_.size(); ++e) {
    const auto& ed = g_->edges[e];
    for (const auto& m : labels_[e]) s.bundles.push_back({ed.doc, ed.word, m.rd, m.rw, m.c});
  }
  canonicalize(s);
  return s;
}

Hierarchy BlockState::export_hierarchy() const { return Hierarchy{parents_}; }

// ---------------------------------------------------------------------------
// groups and blocks

int BlockState::fresh_group(Side s, int sibling) {
  for (std::size_t r = 0; r < groups_.size(); ++r)
    if (groups_[r].side == s && groups_[r].e == 0 && groups_[r].member_list.empty()) {
      if (sibling >= 0 && !parents_.empty())
        parents_[0][r] = parents_[0][static_cast<std::size_t>(sibling)];
      return static_cast<int>(r);
    }
  const int r = capacity();
  groups_.emplace_back();
  groups_.back().side = s;
  ers_.emplace_back();
  if (!parents_.empty()) {
    int p = -1;
    if (sibling >= 0) p = parents_[0][static_cast<std::size_t>(sibling)];
    if (p < 0)
      for (std::size_t b = 0; b < block_side_[0].size(); ++b)
        if (block_side_[0][b] == s) {
          p = static_cast<int>(b);
          break;
        }
    if (p < 0) p = fresh_block(2, s);
    parents_[0].push_back(p);
  }
  return r;
}

int BlockState::fresh_block(int l, Side s) {
  const auto k = static_cast<std::size_t>(l - 2);
  const int id = static_cast<int>(block_side_[k].size());
  block_side_[k].push_back(s);
  level_n_[k].push_back(0);
  if (k + 1 < parents_.size()) {
    int p = -1;
    for (std::size_t b = 0; b < block_side_[k + 1].size(); ++b)
      if (block_side_[k + 1][b] == s) {
        p = static_cast<int>(b);
        break;
      }
    if (p < 0) p = fresh_block(l + 1, s);
    parents_[k + 1].push_back(p);
  }
  return id;
}

double BlockState::set_parent(int l, int r, int p) {
  const auto k = static_cast<std::size_t>(l - 1);
  if (level_side(l, r) != level_side(l + 1, p)) {
    // a childless block takes the side of its first child
    bool childless = true;
    for (std::size_t c = 0; c < parents_[k].size() && childless; ++c)
      if (parents_[k][c] == p && static_cast<int>(c) != r) childless = false;
    const bool top = k + 1 >= parents_.size();
    if (childless && (top || level_side(l + 2, parents_[k + 1][static_cast<std::size_t>(p)]) == level_side(l, r)))
      block_side_[k][static_cast<std::size_t>(p)] = level_side(l, r);
  }
  if (level_side(l, r) != level_side(l + 1, p))
    throw IntegrityError("level " + std::to_string(l + 1) + ": block " + std::to_string(p) +
                         " would mix doc and word groups");
  if (parents_[k][static_cast<std::size_t>(r)] == p) return 0.0;
  if (recording_ && !saved_parents_valid_) {
    saved_parents_ = parents_;
    saved_parents_valid_ = true;
  }
  parents_[k][static_cast<std::size_t>(r)] = p;
  const double before = sigma_;
  const double h0 = hier_cost_;
  // rebuild level counts above level l
  for (std::size_t kk = k; kk < level_e_.size(); ++kk) level_e_[kk].clear();
  for (std::size_t rr = 0; rr < groups_.size(); ++rr) {
    if (groups_[rr].side != Side::Doc) continue;
    for (const auto& [t, c] : ers_[rr]) {
      int cr = static_cast<int>(rr), cs = t;
      for (std::size_t kk = 0; kk < parents_.size(); ++kk) {
        cr = parents_[kk][static_cast<std::size_t>(cr)];
        cs = parents_[kk][static_cast<std::size_t>(cs)];
        if (kk >= k) level_e_[kk][pair_key(cr, cs)] += cr == cs ? 2 * c : c;
      }
    }
  }
  hier_cost_ = hier_full();
  sigma_ += hier_cost_ - h0;
  return sigma_ - before;
}

double BlockState::set_hierarchy(const Hierarchy& h) {
  if (!h.parents.empty() && static_cast<int>(h.parents[0].size()) != capacity())
    throw IntegrityError("level 2 parent map does not cover all groups");
  const double before = sigma_;
  parents_ = h.parents;
  assign_block_sides();
  level_e_.assign(parents_.size(), {});
  level_n_.assign(parents_.size(), {});
  for (std::size_t k = 0; k < parents_.size(); ++k) level_n_[k].assign(block_side_[k].size(), 0);
  resync();
  return sigma_ - before;
}

}  // namespace topicblocks
