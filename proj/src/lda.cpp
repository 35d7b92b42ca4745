#include "topicblocks/lda.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>

#include "topicblocks/util/error.hpp"
#include "topicblocks/util/rng.hpp"

namespace topicblocks {

namespace {

void check_base(const std::vector<double>& p, const char* name) {
  if (p.empty()) throw InvalidInput(std::string(name) + ": empty base measure");
  double s = 0.0;
  for (double x : p) {
    if (!(x > 0)) throw InvalidInput(std::string(name) + ": entries must be positive");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-9)
    throw InvalidInput(std::string(name) + ": base measure sums to " + std::to_string(s));
}

}  // namespace

DirichletHyper make_hyper(double alpha, double beta, const std::vector<double>& p_r,
                          const std::vector<double>& p_w, std::size_t D) {
  if (!(alpha > 0) || !(beta > 0)) throw InvalidInput("hyperparameter scalars must be positive");
  check_base(p_r, "p_r");
  check_base(p_w, "p_w");
  DirichletHyper h;
  h.alpha_scalar = alpha;
  h.beta_scalar = beta;
  h.p_r = p_r;
  h.p_w = p_w;
  const std::size_t K = p_r.size(), V = p_w.size();
  h.alpha = Matrix(D, K);
  h.beta = Matrix(K, V);
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t r = 0; r < K; ++r) h.alpha(d, r) = alpha * static_cast<double>(K) * p_r[r];
  for (std::size_t r = 0; r < K; ++r)
    for (std::size_t w = 0; w < V; ++w) h.beta(r, w) = beta * static_cast<double>(V) * p_w[w];
  return h;
}

DirichletHyper noninformative_hyper(std::size_t D, std::size_t K, std::size_t V) {
  DirichletHyper h;
  h.p_r = uniform_base(K);
  h.p_w = uniform_base(V);
  h.alpha = Matrix(D, K, 1.0);
  h.beta = Matrix(K, V, 1.0);
  return h;
}

std::vector<double> uniform_base(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<double> harmonic_base(std::size_t n) {
  std::vector<double> p(n);
  for (std::size_t r = 0; r < n; ++r) p[r] = 1.0 / static_cast<double>(r + 1);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= s;
  return p;
}

std::vector<double> double_power_law_base(std::size_t n, double a1, double a2,
                                          std::size_t break_rank) {
  if (break_rank == 0) break_rank = std::max<std::size_t>(1, n / 10);
  std::vector<double> p(n);
  const double b = static_cast<double>(break_rank);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i + 1);
    p[i] = r <= b ? std::pow(r, -a1) : std::pow(b, a2 - a1) * std::pow(r, -a2);
  }
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= s;
  return p;
}

std::vector<double> read_base_measure(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<double> p;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const std::string v = tab == std::string::npos ? line : line.substr(tab + 1);
    try {
      p.push_back(std::stod(v));
    } catch (const std::exception&) {
      throw InvalidInput(path.string() + ": bad probability '" + v + "'");
    }
  }
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  if (p.empty() || !(s > 0)) throw InvalidInput(path.string() + ": empty base measure");
  for (double& x : p) {
    if (!(x > 0)) throw InvalidInput(path.string() + ": probabilities must be positive");
    x /= s;
  }
  return p;
}

std::vector<TopicCount> aggregate_labels(std::vector<TopicCount> labels) {
  auto key = [](const TopicCount& t) { return std::tie(t.d, t.w, t.r); };
  std::sort(labels.begin(), labels.end(),
            [&](const TopicCount& a, const TopicCount& b) { return key(a) < key(b); });
  std::vector<TopicCount> out;
  out.reserve(labels.size());
  for (const auto& t : labels) {
    if (t.count < 0) throw InvalidInput("negative label count");
    if (t.count == 0) continue;
    if (!out.empty() && key(out.back()) == key(t))
      out.back().count += t.count;
    else
      out.push_back(t);
  }
  return out;
}

void check_labels(const Corpus& corpus, const std::vector<TopicCount>& labels, int K) {
  std::vector<CountEntry> tally;
  for (const auto& t : aggregate_labels(labels)) {
    if (t.r < 0 || t.r >= K)
      throw InvalidInput("label topic " + std::to_string(t.r) + " outside 0.." + std::to_string(K - 1));
    if (!tally.empty() && tally.back().doc == t.d && tally.back().word == t.w)
      tally.back().count += t.count;
    else
      tally.push_back({t.d, t.w, t.count});
  }
  if (tally != corpus.counts) throw IntegrityError("label totals do not match corpus counts");
}

namespace {

LdaSample draw_tokens(int K, int V, const std::vector<std::int64_t>& doc_lengths,
                      const Matrix& alpha_rows, const Matrix& beta, std::uint64_t seed) {
  const int D = static_cast<int>(doc_lengths.size());
  if (K <= 0 || D <= 0 || V <= 0) throw InvalidInput("K, D and V must be positive");
  if (alpha_rows.rows != static_cast<std::size_t>(D) || alpha_rows.cols != static_cast<std::size_t>(K) ||
      beta.rows != static_cast<std::size_t>(K) || beta.cols != static_cast<std::size_t>(V))
    throw InvalidInput("hyperparameter dimensions do not match (D, K, V)");
  LdaSample s;
  s.K = K;
  s.seed = seed;
  s.params.phi = Matrix(static_cast<std::size_t>(K), static_cast<std::size_t>(V));
  s.params.theta = Matrix(static_cast<std::size_t>(D), static_cast<std::size_t>(K));
  s.params.eta_d.resize(static_cast<std::size_t>(D));
  std::vector<AliasSampler> word_of_topic(static_cast<std::size_t>(K));
  for (int r = 0; r < K; ++r) {
    Rng rng = make_rng(seed, "phi", static_cast<std::uint64_t>(r));
    const auto phi = dirichlet(rng, beta.row(static_cast<std::size_t>(r)));
    std::copy(phi.begin(), phi.end(), s.params.phi.row(static_cast<std::size_t>(r)).begin());
    word_of_topic[static_cast<std::size_t>(r)] = AliasSampler(phi);
  }
  std::vector<std::vector<TopicCount>> per_doc(static_cast<std::size_t>(D));
#pragma omp parallel for schedule(dynamic, 16)
  for (int d = 0; d < D; ++d) {
    const auto du = static_cast<std::size_t>(d);
    Rng rng = make_rng(seed, "doc", du);
    const auto theta = dirichlet(rng, alpha_rows.row(du));
    std::copy(theta.begin(), theta.end(), s.params.theta.row(du).begin());
    s.params.eta_d[du] = static_cast<double>(doc_lengths[du]);
    std::vector<double> cdf(theta.size());
    std::partial_sum(theta.begin(), theta.end(), cdf.begin());
    auto& out = per_doc[du];
    for (std::int64_t t = 0; t < doc_lengths[du]; ++t) {
      const double u = uniform01(rng) * cdf.back();
      int r = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      r = std::min(r, K - 1);
      while (theta[static_cast<std::size_t>(r)] == 0.0 && r > 0) --r;
      const int w = static_cast<int>(word_of_topic[static_cast<std::size_t>(r)](rng));
      out.push_back({d, w, r, 1});
    }
    out = aggregate_labels(std::move(out));
  }
  std::vector<CountEntry> counts;
  for (auto& v : per_doc) {
    for (const auto& t : v) {
      if (!counts.empty() && counts.back().doc == t.d && counts.back().word == t.w)
        counts.back().count += t.count;
      else
        counts.push_back({t.d, t.w, t.count});
    }
    s.labels.insert(s.labels.end(), v.begin(), v.end());
  }
  std::vector<std::string> doc_ids(static_cast<std::size_t>(D)), words(static_cast<std::size_t>(V));
  for (int d = 0; d < D; ++d) doc_ids[static_cast<std::size_t>(d)] = "d" + std::to_string(d);
  for (int w = 0; w < V; ++w) words[static_cast<std::size_t>(w)] = "w" + std::to_string(w);
  s.corpus = build_corpus_from_counts(doc_ids, words, counts);
  return s;
}

}  // namespace

LdaSample sample_corpus(int K, int D, int V, const std::vector<std::int64_t>& doc_lengths,
                        const DirichletHyper& hyper, std::uint64_t seed) {
  if (static_cast<int>(doc_lengths.size()) != D)
    throw InvalidInput("doc_lengths has " + std::to_string(doc_lengths.size()) + " entries for D=" +
                       std::to_string(D));
  LdaSample s = draw_tokens(K, V, doc_lengths, hyper.alpha, hyper.beta, seed);
  s.hyper = hyper;
  return s;
}

LdaSample sample_corpus_mixture(int K, int V, const std::vector<std::int64_t>& doc_lengths,
                                const Matrix& alpha_rows, const Matrix& beta, std::uint64_t seed) {
  LdaSample s = draw_tokens(K, V, doc_lengths, alpha_rows, beta, seed);
  s.hyper.alpha = alpha_rows;
  s.hyper.beta = beta;
  return s;
}

double plsi_loglik(const std::vector<TopicCount>& labels, const LdaParams& params) {
  const std::size_t D = params.eta_d.size();
  std::vector<std::int64_t> k(D, 0);
  double logp = 0.0;
  for (const auto& t : aggregate_labels(labels)) {
    const auto d = static_cast<std::size_t>(t.d), r = static_cast<std::size_t>(t.r),
               w = static_cast<std::size_t>(t.w);
    if (d >= D || r >= params.theta.cols || w >= params.phi.cols)
      throw InvalidInput("plsi_loglik: label index out of range");
    const double p = params.phi(r, w) * params.theta(d, r);
    if (!(p > 0)) return kNegInf;
    logp += static_cast<double>(t.count) * std::log(p) - log_factorial(t.count);
    k[d] += t.count;
  }
  for (std::size_t d = 0; d < D; ++d) {
    const double eta = params.eta_d[d];
    if (k[d] > 0) {
      if (!(eta > 0)) return kNegInf;
      logp += static_cast<double>(k[d]) * std::log(eta);
    }
    logp -= eta;
  }
  return logp;
}

namespace {

struct LdaTerms {
  double lengths = 0;       // log ∏ η^k e^{-η}
  double multiplicity = 0;  // log ∏ 1/n!
  double doc_topic = 0;
  double topic_word = 0;
};

LdaTerms lda_terms(const std::vector<TopicCount>& labels, const DirichletHyper& hyper,
                   const std::vector<double>& eta_d) {
  const std::size_t D = hyper.D(), K = hyper.K(), V = hyper.V();
  if (eta_d.size() != D || hyper.beta.rows != K)
    throw InvalidInput("lda_marginal_loglik: dimension mismatch between hyper and eta");
  Matrix ndr(D, K), nrw(K, V);
  std::vector<double> kd(D, 0.0), nr(K, 0.0);
  LdaTerms t;
  for (const auto& l : aggregate_labels(labels)) {
    const auto d = static_cast<std::size_t>(l.d), r = static_cast<std::size_t>(l.r),
               w = static_cast<std::size_t>(l.w);
    if (d >= D || r >= K || w >= V) throw IntegrityError("label index outside hyper dimensions");
    const auto c = static_cast<double>(l.count);
    ndr(d, r) += c;
    nrw(r, w) += c;
    kd[d] += c;
    nr[r] += c;
    t.multiplicity -= log_factorial(l.count);
  }
  for (std::size_t d = 0; d < D; ++d) {
    if (kd[d] > 0) t.lengths += kd[d] * std::log(eta_d[d]);
    t.lengths -= eta_d[d];
    double sa = 0.0;
    for (std::size_t r = 0; r < K; ++r) {
      const double a = hyper.alpha(d, r);
      sa += a;
      if (ndr(d, r) > 0) t.doc_topic += log_gamma(ndr(d, r) + a) - log_gamma(a);
    }
    t.doc_topic += log_gamma(sa) - log_gamma(kd[d] + sa);
  }
  for (std::size_t r = 0; r < K; ++r) {
    double sb = 0.0;
    for (std::size_t w = 0; w < V; ++w) {
      const double b = hyper.beta(r, w);
      sb += b;
      if (nrw(r, w) > 0) t.topic_word += log_gamma(nrw(r, w) + b) - log_gamma(b);
    }
    t.topic_word += log_gamma(sb) - log_gamma(nr[r] + sb);
  }
  return t;
}

}  // namespace

double lda_marginal_loglik(const std::vector<TopicCount>& labels, const DirichletHyper& hyper,
                           const std::vector<double>& eta_d) {
  const auto t = lda_terms(labels, hyper, eta_d);
  return t.lengths + t.multiplicity + t.doc_topic + t.topic_word;
}

ModelScore lda_description_length(const std::vector<TopicCount>& labels,
                                  const DirichletHyper& hyper, const std::vector<double>& eta_d) {
  const auto t = lda_terms(labels, hyper, eta_d);
  ModelScore s;
  s.model_id = "lda";
  s.add("doc_lengths", -t.lengths);
  s.add("label_multiplicity", -t.multiplicity);
  s.add("doc_topic", -t.doc_topic);
  s.add("topic_word", -t.topic_word);
  s.add("length_prior(fixed=0)", 0.0);
  return s;
}

ModelScore lda_description_length(const std::vector<TopicCount>& labels,
                                  const DirichletHyper& hyper) {
  std::vector<double> eta(hyper.D(), 0.0);
  for (const auto& l : labels) eta.at(static_cast<std::size_t>(l.d)) += static_cast<double>(l.count);
  return lda_description_length(labels, hyper, eta);
}

}  // namespace topicblocks
