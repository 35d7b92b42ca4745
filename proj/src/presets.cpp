#include "topicblocks/presets.hpp"

#include <cstdio>
#include <exception>
#include <sstream>

#include "topicblocks/util/error.hpp"
#include "topicblocks/util/rng.hpp"

namespace topicblocks {

DirichletHyper synthetic_hyper(int D, int K, int V, double alpha, double beta, bool zipf_words) {
  const auto Vs = static_cast<std::size_t>(V);
  return make_hyper(alpha, beta, uniform_base(static_cast<std::size_t>(K)),
                    zipf_words ? double_power_law_base(Vs) : uniform_base(Vs), static_cast<std::size_t>(D));
}

std::vector<ModelSpec> four_curves() {
  return {{"lda-noninformative", ModelKind::LdaNoninformative, {}},
          {"lda-true-prior", ModelKind::LdaTruePrior, {}},
          {"hsbm-unclustered", ModelKind::HsbmTrueLabels, {}},
          {"hsbm-clustered", ModelKind::HsbmTrueLabelsClustered, {}}};
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Table rows behind extra leading columns; the header is written once.
void append_table(std::ostringstream& o, const std::string& head, const std::string& prefix,
                  const ComparisonTable& t, bool header) {
  const std::string tsv = t.to_tsv();
  std::istringstream in(tsv);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (header) o << head << '\t' << line << '\n';
      continue;
    }
    o << prefix << '\t' << line << '\n';
  }
}

}  // namespace

std::vector<Fig4Point> run_fig4(const Fig4Preset& p) {
  if (p.lengths.empty()) throw InvalidInput("fig4 needs at least one text length");
  const auto hyper = synthetic_hyper(p.D, p.K, p.V, p.alpha, p.beta, p.zipf);
  std::vector<Fig4Point> out;
  for (const int m : p.lengths) {
    if (m <= 0) throw InvalidInput("text lengths must be positive");
    const auto s = sample_corpus(p.K, p.D, p.V, std::vector<std::int64_t>(static_cast<std::size_t>(p.D), m), hyper,
                                 substream_seed(p.seed, "fig4", static_cast<std::uint64_t>(m)));
    out.push_back({m, compare_models(s.corpus, &s, four_curves())});
  }
  return out;
}

std::string fig4_tsv(const std::vector<Fig4Point>& pts) {
  std::ostringstream o;
  for (std::size_t k = 0; k < pts.size(); ++k) append_table(o, "m", std::to_string(pts[k].m), pts[k].table, k == 0);
  return o.str();
}

std::vector<SmCell> run_sm_sweep(const SmSweepPreset& p, bool parallel) {
  std::vector<SmCell> cells;
  for (const int K : p.topics)
    for (const double a : p.alphas)
      for (const double b : p.betas) cells.push_back({K, a, b, {}});
  std::vector<std::exception_ptr> errs(cells.size());
  const int n = static_cast<int>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (int i = 0; i < n; ++i) {
    try {
      auto& c = cells[static_cast<std::size_t>(i)];
      const auto hyper = synthetic_hyper(p.D, c.K, p.V, c.alpha, c.beta, p.zipf);
      const auto s = sample_corpus(c.K, p.D, p.V, std::vector<std::int64_t>(static_cast<std::size_t>(p.D), p.m),
                                   hyper, substream_seed(p.seed, "sm-sweep", static_cast<std::uint64_t>(i)));
      c.table = compare_models(s.corpus, &s, four_curves());
    } catch (...) {
      errs[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errs)
    if (e) std::rethrow_exception(e);
  return cells;
}

std::string sm_sweep_tsv(const std::vector<SmCell>& cells) {
  std::ostringstream o;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    append_table(o, "topics\talpha\tbeta", std::to_string(c.K) + '\t' + num(c.alpha) + '\t' + num(c.beta), c.table,
                 k == 0);
  }
  return o.str();
}

LdaSample bimodal_sample(int D, int V, int m, std::uint64_t seed) {
  if (D <= 0 || V <= 0 || m <= 0) throw InvalidInput("bimodal sample needs positive D, V and m");
  const int K = 3;
  Matrix alpha(static_cast<std::size_t>(D), K);
  for (std::size_t d = 0; d < alpha.rows; ++d)
    for (std::size_t r = 0; r < K; ++r) alpha(d, r) = d % 2 ? 100.0 / 3.0 : (r == 1 ? 80.0 : 10.0);
  const Matrix beta(K, static_cast<std::size_t>(V), 0.01);
  return sample_corpus_mixture(K, V, std::vector<std::int64_t>(static_cast<std::size_t>(D), m), alpha, beta, seed);
}

InferenceConfig fig2_mode_config(int K, std::uint64_t seed) {
  InferenceConfig c;
  c.seed = seed;
  c.doc_clustering = DocClustering::PerDocGroup;
  c.fixed_word_groups = K;
  c.hierarchy_moves = false;
  return c;
}

InferenceConfig clustered_k_config(int K, std::uint64_t seed) {
  InferenceConfig c;
  c.seed = seed;
  c.doc_clustering = DocClustering::Clustered;
  c.fixed_word_groups = K;
  return c;
}

Fig2Result run_fig2(const Fig2Preset& p) {
  Fig2Result r;
  r.sample = bimodal_sample(p.D, p.V, p.m, substream_seed(p.seed, "fig2", 0));
  const auto& s = r.sample;
  const auto g = from_counts(s.corpus);
  auto desk = [&](InferenceConfig c) {
    c.n_sweeps = p.sweeps;
    c.n_restarts = p.restarts;
    c.window = 3;
    return c;
  };
  r.clustered = fit(g, desk(clustered_k_config(s.K, p.seed)));
  r.per_doc = fit(g, desk(fig2_mode_config(s.K, p.seed)));

  r.table = compare_models(s.corpus, &s,
                           {{"lda-noninformative", ModelKind::LdaNoninformative, {}},
                            {"lda-true-prior", ModelKind::LdaTruePrior, {}}});
  auto fit_row = [&](const std::string& name, const FitResult& f) {
    ComparisonRow row;
    row.name = name;
    row.kind = ModelKind::HsbmFit;
    row.score = f.score;
    row.doc_groups = f.doc_groups;
    row.word_groups = f.word_groups;
    row.depth = f.depth;
    r.table.rows.push_back(std::move(row));
  };
  fit_row("hsbm-clustered", r.clustered);
  fit_row("hsbm-fig2-mode", r.per_doc);
  finalize_table(r.table);

  r.truth_hist = simplex_histogram(topic_mixtures(s.labels, p.D, s.K), p.n_bins);
  r.clustered_hist = simplex_histogram(topic_mixtures(g, r.clustered.state), p.n_bins);
  r.per_doc_hist = simplex_histogram(topic_mixtures(g, r.per_doc.state), p.n_bins);
  r.truth_modes = count_modes(r.truth_hist, p.mode_fraction);
  r.clustered_modes = count_modes(r.clustered_hist, p.mode_fraction);
  r.per_doc_modes = count_modes(r.per_doc_hist, p.mode_fraction);
  return r;
}

}  // namespace topicblocks
