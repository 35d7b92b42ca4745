#include "topicblocks/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "topicblocks/util/error.hpp"
#include "topicblocks/util/rng.hpp"

namespace topicblocks {

double bayes_factor(double sigma_1, double sigma_2) { return std::exp(-(sigma_1 - sigma_2)); }
double log_bayes_factor(double sigma_1, double sigma_2) { return -(sigma_1 - sigma_2); }

// ---------------------------------------------------------------------------
// comparison tables

ModelKind parse_model_kind(const std::string& s) {
  if (s == "lda-noninformative") return ModelKind::LdaNoninformative;
  if (s == "lda-true-prior") return ModelKind::LdaTruePrior;
  if (s == "hsbm-fit") return ModelKind::HsbmFit;
  if (s == "hsbm-true-labels") return ModelKind::HsbmTrueLabels;
  if (s == "hsbm-true-labels-clustered") return ModelKind::HsbmTrueLabelsClustered;
  throw InvalidInput("unknown model kind '" + s +
                     "' (expected lda-noninformative, lda-true-prior, hsbm-fit, hsbm-true-labels or "
                     "hsbm-true-labels-clustered)");
}

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::LdaNoninformative: return "lda-noninformative";
    case ModelKind::LdaTruePrior: return "lda-true-prior";
    case ModelKind::HsbmFit: return "hsbm-fit";
    case ModelKind::HsbmTrueLabels: return "hsbm-true-labels";
    case ModelKind::HsbmTrueLabelsClustered: return "hsbm-true-labels-clustered";
  }
  return "?";
}

bool needs_labels(ModelKind k) { return k != ModelKind::HsbmFit; }

int ComparisonTable::best_index() const {
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].best) return static_cast<int>(i);
  return -1;
}

std::string ComparisonTable::to_tsv() const {
  std::ostringstream o;
  o << "name\tkind\tparametrization\tK\tdoc_groups\tword_groups\tdepth\tD\tV\ttokens\tedges\tsigma\tsigma_per_token"
       "\tdelta_sigma\tbest\n";
  char buf[64];
  for (const auto& r : rows) {
    o << r.name << '\t' << model_kind_name(r.kind) << '\t' << r.score.parametrization << '\t' << r.K << '\t'
      << r.doc_groups << '\t' << r.word_groups << '\t' << r.depth << '\t' << D << '\t' << V << '\t' << tokens << '\t'
      << edges << '\t';
    std::snprintf(buf, sizeof buf, "%.17g", r.score.sigma);
    o << buf << '\t';
    std::snprintf(buf, sizeof buf, "%.17g", r.per_token);
    o << buf << '\t';
    std::snprintf(buf, sizeof buf, "%.17g", r.delta);
    o << buf << '\t' << (r.best ? 1 : 0) << '\n';
  }
  return o.str();
}

void finalize_table(ComparisonTable& t, const std::string& baseline) {
  if (t.rows.empty()) return;
  std::size_t base = 0;
  bool found = false;
  if (!baseline.empty()) {
    for (std::size_t i = 0; i < t.rows.size() && !found; ++i)
      if (t.rows[i].name == baseline) base = i, found = true;
    if (!found) throw InvalidInput("baseline '" + baseline + "' is not a row of the table");
  } else {
    for (std::size_t i = 0; i < t.rows.size() && !found; ++i)
      if (t.rows[i].kind == ModelKind::LdaTruePrior) base = i, found = true;
  }
  t.baseline = t.rows[base].name;
  std::size_t best = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    auto& r = t.rows[i];
    r.delta = r.score.sigma - t.rows[base].score.sigma;
    r.per_token = t.tokens > 0 ? r.score.sigma / static_cast<double>(t.tokens) : 0.0;
    r.best = false;
    if (r.score.sigma < t.rows[best].score.sigma) best = i;
  }
  t.rows[best].best = true;
}

namespace {

void count_groups(const LabeledState& s, ComparisonRow& row) {
  LabeledState c = s;
  Hierarchy h;
  compact_groups(c, h);
  for (const Side x : c.side_of_group) (x == Side::Doc ? row.doc_groups : row.word_groups)++;
}

}  // namespace

ComparisonTable compare_models(const Corpus& corpus, const LdaSample* sample, const std::vector<ModelSpec>& specs,
                               const std::string& baseline) {
  const BipartiteMultigraph g = from_counts(corpus);
  ComparisonTable t;
  t.D = g.D;
  t.V = g.V;
  t.tokens = g.E;
  t.edges = static_cast<std::int64_t>(g.edges.size());
  for (const auto& spec : specs) {
    if (needs_labels(spec.kind) && sample == nullptr)
      throw InvalidInput("model '" + spec.name + "' (" + model_kind_name(spec.kind) +
                         ") is scored from true topic labels, which only synthetic samples carry");
    ComparisonRow row;
    row.name = spec.name.empty() ? model_kind_name(spec.kind) : spec.name;
    row.kind = spec.kind;
    switch (spec.kind) {
      case ModelKind::LdaNoninformative:
        row.score = lda_description_length(sample->labels, noninformative_hyper(static_cast<std::size_t>(g.D),
                                                                                static_cast<std::size_t>(sample->K),
                                                                                static_cast<std::size_t>(g.V)));
        row.K = sample->K;
        break;
      case ModelKind::LdaTruePrior:
        row.score = lda_description_length(sample->labels, sample->hyper);
        row.K = sample->K;
        break;
      case ModelKind::HsbmTrueLabels:
      case ModelKind::HsbmTrueLabelsClustered: {
        const auto v = spec.kind == ModelKind::HsbmTrueLabels ? LabelVariant::NoDocClustering : LabelVariant::DocClustering;
        row.score = fixed_label_score(*sample, v);
        count_groups(labels_to_state(g, sample->labels, sample->K, v), row);
        break;
      }
      case ModelKind::HsbmFit: {
        const FitResult r = fit(g, spec.fit);
        row.score = r.score;
        row.doc_groups = r.doc_groups;
        row.word_groups = r.word_groups;
        row.depth = r.depth;
        break;
      }
    }
    t.rows.push_back(std::move(row));
  }
  finalize_table(t, baseline);
  return t;
}

// ---------------------------------------------------------------------------
// topic mixtures

TopicMixtures topic_mixtures(const BipartiteMultigraph& g, const LabeledState& s) {
  std::vector<int> groups;
  for (int r = 0; r < s.B; ++r)
    if (s.side_of_group[static_cast<std::size_t>(r)] == Side::Word) groups.push_back(r);
  std::vector<int> col(static_cast<std::size_t>(s.B), -1);
  for (std::size_t c = 0; c < groups.size(); ++c) col[static_cast<std::size_t>(groups[c])] = static_cast<int>(c);
  // drop word groups that hold nothing
  std::vector<std::int64_t> mass(groups.size(), 0);
  for (const auto& b : s.bundles) mass[static_cast<std::size_t>(col[static_cast<std::size_t>(b.rw)])] += b.count;
  std::vector<int> kept;
  for (std::size_t c = 0; c < groups.size(); ++c)
    if (mass[c] > 0) kept.push_back(groups[c]);
  std::fill(col.begin(), col.end(), -1);
  for (std::size_t c = 0; c < kept.size(); ++c) col[static_cast<std::size_t>(kept[c])] = static_cast<int>(c);

  TopicMixtures m;
  m.groups = kept;
  m.theta = Matrix(static_cast<std::size_t>(g.D), kept.size(), 0.0);
  std::vector<std::int64_t> k(static_cast<std::size_t>(g.D), 0);
  for (const auto& b : s.bundles) {
    m.theta(static_cast<std::size_t>(b.d), static_cast<std::size_t>(col[static_cast<std::size_t>(b.rw)])) +=
        static_cast<double>(b.count);
    k[static_cast<std::size_t>(b.d)] += b.count;
  }
  m.undefined.assign(static_cast<std::size_t>(g.D), 0);
  for (std::size_t d = 0; d < k.size(); ++d) {
    if (k[d] == 0) {
      m.undefined[d] = 1;
      continue;
    }
    for (double& x : m.theta.row(d)) x /= static_cast<double>(k[d]);
  }
  return m;
}

TopicMixtures topic_mixtures(const std::vector<TopicCount>& labels, int D, int K) {
  TopicMixtures m;
  m.groups.resize(static_cast<std::size_t>(K));
  std::iota(m.groups.begin(), m.groups.end(), 0);
  m.theta = Matrix(static_cast<std::size_t>(D), static_cast<std::size_t>(K), 0.0);
  std::vector<std::int64_t> k(static_cast<std::size_t>(D), 0);
  for (const auto& l : labels) {
    if (l.d < 0 || l.d >= D || l.r < 0 || l.r >= K) throw InvalidInput("label outside the D x K range");
    m.theta(static_cast<std::size_t>(l.d), static_cast<std::size_t>(l.r)) += static_cast<double>(l.count);
    k[static_cast<std::size_t>(l.d)] += l.count;
  }
  m.undefined.assign(static_cast<std::size_t>(D), 0);
  for (std::size_t d = 0; d < k.size(); ++d) {
    if (k[d] == 0) {
      m.undefined[d] = 1;
      continue;
    }
    for (double& x : m.theta.row(d)) x /= static_cast<double>(k[d]);
  }
  return m;
}

std::size_t SimplexHistogram::index(int i, int j) const {
  // rows i = 0..n-1 hold n - i cells
  const auto ii = static_cast<std::size_t>(i), nn = static_cast<std::size_t>(n);
  return ii * nn - ii * (ii - 1) / 2 + static_cast<std::size_t>(j);
}

std::string SimplexHistogram::to_tsv() const {
  std::ostringstream o;
  o << "i\tj\tx0\tx1\tx2\tcount\n";
  char buf[128];
  for (int i = 0; i < n; ++i)
    for (int j = 0; i + j < n; ++j) {
      const double x0 = (i + 0.5) / n, x1 = (j + 0.5) / n;
      std::snprintf(buf, sizeof buf, "%d\t%d\t%.6f\t%.6f\t%.6f\t%lld\n", i, j, x0, x1, std::max(0.0, 1.0 - x0 - x1),
                    static_cast<long long>(at(i, j)));
      o << buf;
    }
  return o.str();
}

SimplexHistogram simplex_histogram(const TopicMixtures& m, int n_bins) {
  if (m.theta.cols != 3)
    throw InvalidInput("simplex histogram needs three mixture components, got " + std::to_string(m.theta.cols));
  if (n_bins <= 0) throw InvalidInput("n_bins must be positive");
  SimplexHistogram h;
  h.n = n_bins;
  h.counts.assign(static_cast<std::size_t>(n_bins) * static_cast<std::size_t>(n_bins + 1) / 2, 0);
  for (std::size_t d = 0; d < m.theta.rows; ++d) {
    if (m.undefined[d]) continue;
    int i = std::min(n_bins - 1, static_cast<int>(m.theta(d, 0) * n_bins));
    int j = std::min(n_bins - 1, static_cast<int>(m.theta(d, 1) * n_bins));
    if (i + j >= n_bins) j = std::max(0, n_bins - 1 - i);
    ++h.counts[h.index(i, j)];
    ++h.total;
  }
  return h;
}

int count_modes(const SimplexHistogram& h, double min_fraction) {
  const double thr = std::max(1.0, min_fraction * static_cast<double>(h.total));
  std::vector<char> seen(h.counts.size(), 0);
  int modes = 0;
  for (int i = 0; i < h.n; ++i)
    for (int j = 0; i + j < h.n; ++j) {
      if (seen[h.index(i, j)] || static_cast<double>(h.at(i, j)) < thr) continue;
      ++modes;
      std::vector<std::pair<int, int>> stack = {{i, j}};
      seen[h.index(i, j)] = 1;
      while (!stack.empty()) {
        const auto [a, b] = stack.back();
        stack.pop_back();
        for (int da = -1; da <= 1; ++da)
          for (int db = -1; db <= 1; ++db) {
            const int x = a + da, y = b + db;
            if (x < 0 || y < 0 || x + y >= h.n) continue;
            const auto id = h.index(x, y);
            if (seen[id] || static_cast<double>(h.counts[id]) < thr) continue;
            seen[id] = 1;
            stack.emplace_back(x, y);
          }
      }
    }
  return modes;
}

// ---------------------------------------------------------------------------
// dissemination

namespace {

struct LengthHistogram {
  std::vector<std::pair<std::int64_t, std::int64_t>> bins;  // (k_d, number of docs)
  std::int64_t M = 0;
};

LengthHistogram length_histogram(const std::vector<std::int64_t>& lengths) {
  std::map<std::int64_t, std::int64_t> h;
  LengthHistogram out;
  for (const auto k : lengths) {
    ++h[k];
    out.M += k;
  }
  out.bins.assign(h.begin(), h.end());
  return out;
}

double spread(const LengthHistogram& lh, std::int64_t n_w) {
  double s = 0.0;
  for (const auto& [k, cnt] : lh.bins) {
    if (k == 0) continue;
    const double p = static_cast<double>(k) / static_cast<double>(lh.M);
    const double hit = p >= 1.0 ? 1.0 : -std::expm1(static_cast<double>(n_w) * std::log1p(-p));
    s += static_cast<double>(cnt) * hit;
  }
  return s;
}

}  // namespace

double null_doc_spread(const std::vector<std::int64_t>& doc_lengths, std::int64_t n_w) {
  return spread(length_histogram(doc_lengths), n_w);
}

Dissemination dissemination(const Corpus& corpus, int word) {
  if (word < 0 || word >= corpus.num_words()) throw InvalidInput("word id " + std::to_string(word) + " out of range");
  Dissemination r;
  r.word = word;
  for (const auto& c : corpus.counts)
    if (c.word == word) {
      r.n_w += c.count;
      ++r.D_w;
    }
  if (r.n_w == 0) throw InvalidInput("word '" + corpus.vocab.word(word) + "' does not occur (n_w = 0)");
  r.expected = null_doc_spread(corpus.doc_lengths(), r.n_w);
  r.U_D = static_cast<double>(r.D_w) / r.expected;
  return r;
}

std::vector<Dissemination> dissemination_all(const Corpus& corpus, bool parallel) {
  const int V = corpus.num_words();
  std::vector<std::int64_t> n(static_cast<std::size_t>(V), 0);
  std::vector<int> Dw(static_cast<std::size_t>(V), 0);
  for (const auto& c : corpus.counts) {
    n[static_cast<std::size_t>(c.word)] += c.count;
    ++Dw[static_cast<std::size_t>(c.word)];
  }
  const LengthHistogram lh = length_histogram(corpus.doc_lengths());
  std::vector<Dissemination> all(static_cast<std::size_t>(V));
#pragma omp parallel for schedule(dynamic, 64) if (parallel)
  for (int w = 0; w < V; ++w) {
    auto& r = all[static_cast<std::size_t>(w)];
    r.word = w;
    r.n_w = n[static_cast<std::size_t>(w)];
    r.D_w = Dw[static_cast<std::size_t>(w)];
    if (r.n_w == 0) continue;
    r.expected = spread(lh, r.n_w);
    r.U_D = static_cast<double>(r.D_w) / r.expected;
  }
  std::vector<Dissemination> out;
  out.reserve(all.size());
  for (auto& r : all)
    if (r.n_w > 0) out.push_back(r);
  return out;
}

Corpus shuffle_tokens(const Corpus& corpus, std::uint64_t seed) {
  std::vector<int> tokens;
  tokens.reserve(static_cast<std::size_t>(corpus.num_tokens()));
  for (const auto& d : corpus.docs) tokens.insert(tokens.end(), d.tokens.begin(), d.tokens.end());
  Rng rng = make_rng(seed, "shuffle_tokens");
  shuffle(tokens, rng);
  std::vector<std::string> ids;
  std::vector<CountEntry> counts;
  std::size_t pos = 0;
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    ids.push_back(corpus.docs[d].id);
    std::map<int, std::int64_t> c;
    for (std::size_t k = 0; k < corpus.docs[d].tokens.size(); ++k) ++c[tokens[pos++]];
    for (const auto& [w, x] : c) counts.push_back({static_cast<int>(d), w, x});
  }
  return build_corpus_from_counts(ids, corpus.vocab.words(), counts);
}

double median(std::vector<double> v) { return percentile(std::move(v), 50.0); }

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(v.size() - 1, lo + 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

NullCheck dissemination_null_check(const Corpus& corpus, std::uint64_t seed, std::int64_t min_count) {
  std::vector<double> u;
  for (const auto& r : dissemination_all(shuffle_tokens(corpus, substream_seed(seed, "null-check"))))
    if (r.n_w >= min_count) u.push_back(r.U_D);
  NullCheck nc;
  nc.words = u.size();
  if (u.size() < 2) throw InvalidInput("fewer than two words with n_w >= " + std::to_string(min_count));
  nc.median = median(u);
  double mean = 0.0;
  for (const double x : u) mean += x;
  mean /= static_cast<double>(u.size());
  double var = 0.0;
  for (const double x : u) var += (x - mean) * (x - mean);
  nc.sigma = std::sqrt(var / static_cast<double>(u.size() - 1));
  nc.within = std::abs(nc.median - 1.0) <= 2.0 * nc.sigma;
  return nc;
}

// ---------------------------------------------------------------------------
// group summaries

std::vector<GroupSummary> group_summaries(const Corpus& corpus, const LabeledState& s, const Hierarchy& h, int level,
                                          std::uint64_t seed, int top_n, int doc_samples) {
  if (level < 1 || level > h.depth())
    throw InvalidInput("level " + std::to_string(level) + " outside 1.." + std::to_string(h.depth()));
  std::vector<int> block(static_cast<std::size_t>(s.B));
  for (int r = 0; r < s.B; ++r) {
    int b = r;
    for (int k = 0; k + 1 < level; ++k) b = h.parents[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)];
    block[static_cast<std::size_t>(r)] = b;
  }
  // (side, block) -> per node mass
  std::map<std::pair<int, int>, std::map<int, std::int64_t>> mass;
  for (const auto& b : s.bundles) {
    mass[{0, block[static_cast<std::size_t>(b.rd)]}][b.d] += b.count;
    mass[{1, block[static_cast<std::size_t>(b.rw)]}][b.w] += b.count;
  }
  std::vector<double> ud(static_cast<std::size_t>(corpus.num_words()), std::nan(""));
  for (const auto& r : dissemination_all(corpus)) ud[static_cast<std::size_t>(r.word)] = r.U_D;
  const auto wc = corpus.word_counts();
  Rng rng = make_rng(seed, "group_summaries", static_cast<std::uint64_t>(level));

  std::vector<GroupSummary> out;
  for (const auto& [key, nodes] : mass) {
    GroupSummary g;
    g.level = level;
    g.side = key.first == 0 ? Side::Doc : Side::Word;
    g.block = key.second;
    g.members = static_cast<int>(nodes.size());
    for (const auto& kv : nodes) g.tokens += kv.second;
    if (g.side == Side::Word) {
      std::vector<std::pair<std::int64_t, int>> words;
      std::vector<double> u;
      for (const auto& [w, c] : nodes) {
        words.emplace_back(c, w);
        u.push_back(ud[static_cast<std::size_t>(w)]);
      }
      std::sort(words.begin(), words.end(), [&](auto& a, auto& b) {
        const auto fa = wc[static_cast<std::size_t>(a.second)], fb = wc[static_cast<std::size_t>(b.second)];
        if (a.first != b.first) return a.first > b.first;
        if (fa != fb) return fa > fb;
        return a.second < b.second;
      });
      for (int k = 0; k < top_n && k < static_cast<int>(words.size()); ++k)
        g.top_words.emplace_back(corpus.vocab.word(words[static_cast<std::size_t>(k)].second),
                                 words[static_cast<std::size_t>(k)].first);
      const double qs[5] = {5, 25, 50, 75, 95};
      for (int k = 0; k < 5; ++k) g.ud_percentiles[static_cast<std::size_t>(k)] = percentile(u, qs[k]);
    } else {
      std::vector<int> docs;
      for (const auto& kv : nodes) docs.push_back(kv.first);
      shuffle(docs, rng);
      docs.resize(std::min(docs.size(), static_cast<std::size_t>(std::max(doc_samples, 0))));
      std::sort(docs.begin(), docs.end());
      for (const int d : docs) g.sample_docs.push_back(corpus.docs[static_cast<std::size_t>(d)].id);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw InvalidInput("labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, std::int64_t> nij;
  std::map<int, std::int64_t> ai, bj;
  for (std::size_t k = 0; k < n; ++k) {
    ++nij[{a[k], b[k]}];
    ++ai[a[k]];
    ++bj[b[k]];
  }
  auto c2 = [](std::int64_t x) { return static_cast<double>(x) * static_cast<double>(x - 1) / 2.0; };
  double sij = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& kv : nij) sij += c2(kv.second);
  for (const auto& kv : ai) sa += c2(kv.second);
  for (const auto& kv : bj) sb += c2(kv.second);
  const double expected = sa * sb / c2(static_cast<std::int64_t>(n));
  const double mx = 0.5 * (sa + sb);
  if (mx == expected) return 1.0;
  return (sij - expected) / (mx - expected);
}

}  // namespace topicblocks
