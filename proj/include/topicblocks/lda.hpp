#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "topicblocks/corpus.hpp"
#include "topicblocks/graph.hpp"
#include "topicblocks/model_score.hpp"
#include "topicblocks/util/math.hpp"

namespace topicblocks {

struct DirichletHyper {
  Matrix alpha;  // D x K
  Matrix beta;   // K x V
  double alpha_scalar = 1.0;
  double beta_scalar = 1.0;
  std::vector<double> p_r;
  std::vector<double> p_w;

  std::size_t D() const { return alpha.rows; }
  std::size_t K() const { return alpha.cols; }
  std::size_t V() const { return beta.cols; }
};

/// α_dr = α K p_r, β_rw = β V p_w. Base measures must sum to one.
DirichletHyper make_hyper(double alpha, double beta, const std::vector<double>& p_r,
                          const std::vector<double>& p_w, std::size_t D);
DirichletHyper noninformative_hyper(std::size_t D, std::size_t K, std::size_t V);

std::vector<double> uniform_base(std::size_t n);
/// p_r ∝ r^{-1}, r = 1..n.
std::vector<double> harmonic_base(std::size_t n);
/// Double power law rank-frequency: p ∝ r^{-a1} for r <= break, continued
/// with exponent a2 beyond it.
std::vector<double> double_power_law_base(std::size_t n, double a1 = 1.0, double a2 = 1.77,
                                          std::size_t break_rank = 0);
/// TSV `item<TAB>probability`; normalized on read.
std::vector<double> read_base_measure(const std::filesystem::path& path);

struct LdaParams {
  std::vector<double> eta_d;
  Matrix theta;  // D x K
  Matrix phi;    // K x V
};

struct LdaSample {
  Corpus corpus;
  std::vector<TopicCount> labels;  // aggregated n_dw^r, sorted by (d, w, r)
  LdaParams params;
  DirichletHyper hyper;
  std::uint64_t seed = 0;
  int K = 0;
};

/// Draws φ_r ~ Dir(β_r), θ_d ~ Dir(α_d); each token picks a topic then a word.
/// Vocabulary entries are named w0, w1, ... and listed in id order, including
/// words that were never drawn.
LdaSample sample_corpus(int K, int D, int V, const std::vector<std::int64_t>& doc_lengths,
                        const DirichletHyper& hyper, std::uint64_t seed);

/// Same as sample_corpus but with an explicit α row per document.
LdaSample sample_corpus_mixture(int K, int V, const std::vector<std::int64_t>& doc_lengths,
                                const Matrix& alpha_rows, const Matrix& beta,
                                std::uint64_t seed);

double plsi_loglik(const std::vector<TopicCount>& labels, const LdaParams& params);

/// Collapsed marginal with Poisson document lengths.
double lda_marginal_loglik(const std::vector<TopicCount>& labels, const DirichletHyper& hyper,
                           const std::vector<double>& eta_d);

/// Σ_LDA with η_d = k_d and the P(η) term fixed at zero.
ModelScore lda_description_length(const std::vector<TopicCount>& labels,
                                  const DirichletHyper& hyper);
ModelScore lda_description_length(const std::vector<TopicCount>& labels,
                                  const DirichletHyper& hyper, const std::vector<double>& eta_d);

/// n_dw^r aggregated and sorted, counts > 0.
std::vector<TopicCount> aggregate_labels(std::vector<TopicCount> labels);

/// Checks label totals against the corpus counts.
void check_labels(const Corpus& corpus, const std::vector<TopicCount>& labels, int K);

}  // namespace topicblocks
