#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topicblocks/evaluation.hpp"
#include "topicblocks/inference.hpp"
#include "topicblocks/lda.hpp"

namespace topicblocks {

/// α/β scalars with a uniform topic base and a Zipf (double power law) or
/// uniform word base.
DirichletHyper synthetic_hyper(int D, int K, int V, double alpha, double beta, bool zipf_words);

/// The four fixed-label models, baseline LDA with the generating prior.
std::vector<ModelSpec> four_curves();

// fig4: ΔΣ against text length m for LDA-generated corpora.
struct Fig4Preset {
  int D = 2000;
  int V = 10000;
  int K = 10;
  double alpha = 1.0;
  double beta = 1.0;
  bool zipf = true;
  std::vector<int> lengths = {8, 32, 128, 512};
  std::uint64_t seed = 1;
};

struct Fig4Point {
  int m = 0;
  ComparisonTable table;
};

std::vector<Fig4Point> run_fig4(const Fig4Preset& p);
std::string fig4_tsv(const std::vector<Fig4Point>& pts);

// sm-sweep: hyperparameter grid at fixed m.
struct SmSweepPreset {
  int D = 1000;
  int V = 10000;
  int m = 128;
  std::vector<int> topics = {2, 10};
  std::vector<double> alphas = {0.01, 1.0, 100.0};
  std::vector<double> betas = {0.01, 1.0, 100.0};
  bool zipf = true;
  std::uint64_t seed = 1;
};

struct SmCell {
  int K = 0;
  double alpha = 0.0;
  double beta = 0.0;
  ComparisonTable table;
};

/// Cells run concurrently; each draws from its own substream.
std::vector<SmCell> run_sm_sweep(const SmSweepPreset& p, bool parallel = true);
std::string sm_sweep_tsv(const std::vector<SmCell>& cells);

// fig2-mode: bimodal two-Dirichlet corpus, K = 3.
struct Fig2Preset {
  int D = 1000;
  int V = 100;
  int m = 1000;
  std::uint64_t seed = 1;
  int sweeps = 10;
  int restarts = 2;
  int n_bins = 20;
  double mode_fraction = 0.02;
};

/// Odd documents draw θ from Dir(100/3, 100/3, 100/3), even ones from
/// Dir(10, 80, 10); β_rw = 0.01.
LdaSample bimodal_sample(int D, int V, int m, std::uint64_t seed);

/// Each document in its own group, K word groups, one level.
InferenceConfig fig2_mode_config(int K, std::uint64_t seed);
/// Documents clustered, K word groups.
InferenceConfig clustered_k_config(int K, std::uint64_t seed);

struct Fig2Result {
  LdaSample sample;
  ComparisonTable table;  // lda-noninformative, lda-true-prior, hsbm-clustered, hsbm-fig2-mode
  FitResult clustered;
  FitResult per_doc;
  SimplexHistogram truth_hist, clustered_hist, per_doc_hist;
  int truth_modes = 0;
  int clustered_modes = 0;
  int per_doc_modes = 0;
};

Fig2Result run_fig2(const Fig2Preset& p);

}  // namespace topicblocks
