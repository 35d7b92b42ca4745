#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topicblocks/block_state.hpp"
#include "topicblocks/graph.hpp"
#include "topicblocks/lda.hpp"
#include "topicblocks/model_score.hpp"
#include "topicblocks/sbm_core.hpp"
#include "topicblocks/util/rng.hpp"

namespace topicblocks {

enum class Mode { Greedy, Mcmc, Anneal };
enum class DocClustering { PerDocGroup, Clustered };
enum class InitKind { Random, Agglomerative };

Mode parse_mode(const std::string& s);
DocClustering parse_doc_clustering(const std::string& s);
const char* mode_name(Mode m);
const char* doc_clustering_name(DocClustering d);

struct InferenceConfig {
  Mode mode = Mode::Anneal;
  DocClustering doc_clustering = DocClustering::Clustered;
  InitKind init = InitKind::Random;
  int Q = 0;
  std::uint64_t seed = 1;
  int n_sweeps = 200;
  int n_restarts = 10;
  /// Anneal schedule, nonincreasing; the greedy phase runs after it.
  std::vector<double> temperatures = {1.0, 0.5, 0.25, 0.1};
  int sweeps_per_temperature = 2;
  int window = 50;
  double tolerance = 0.1;
  int init_doc_groups = 0;   // 0 picks a default
  int init_word_groups = 0;
  /// > 0 keeps exactly this many word groups (no merge or split on that side).
  int fixed_word_groups = 0;
  bool hierarchy_moves = true;
  bool overlap_moves = true;
  /// Fraction of edge labels visited by label moves per sweep.
  double label_move_fraction = 1.0;
  bool parallel = true;
  /// Compares the running Σ with a full recomputation after every accepted
  /// move. Slow, for tests.
  bool check_consistency = false;

  void validate() const;
};

struct MoveStats {
  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  void operator+=(const MoveStats& o) {
    proposed += o.proposed;
    accepted += o.accepted;
  }
};

struct SweepStats {
  MoveStats node, label, merge, split, hierarchy, unit;
  std::int64_t accepted() const {
    return node.accepted + label.accepted + merge.accepted + split.accepted + hierarchy.accepted + unit.accepted;
  }
  void operator+=(const SweepStats& o) {
    node += o.node;
    label += o.label;
    merge += o.merge;
    split += o.split;
    hierarchy += o.hierarchy;
    unit += o.unit;
  }
};

struct FitResult {
  LabeledState state;  // compacted
  Hierarchy hierarchy;
  ModelScore score;
  std::vector<double> trace;  // Σ after each sweep of the best restart
  std::vector<double> restart_sigma;
  SweepStats stats;
  double wall_seconds = 0.0;
  bool converged = false;
  int best_restart = 0;
  int doc_groups = 0;
  int word_groups = 0;
  int depth = 1;
};

/// Side-respecting starting state, non-overlapping. In per-doc-group mode doc
/// d sits in group d.
LabeledState init_state(const BipartiteMultigraph& g, const InferenceConfig& cfg, Rng& rng);

/// One pass of node, label, merge/split and hierarchy moves at temperature T
/// (T = 0 is greedy: accept iff ΔΣ < 0, ties rejected).
SweepStats sweep(BlockState& st, double T, Rng& rng, const InferenceConfig& cfg);

/// Metropolis-Hastings over unit label moves with group ids drawn from a
/// fixed universe per side. Satisfies detailed balance for exp(-Σ/T).
MoveStats mh_unit_steps(BlockState& st, Rng& rng, double T, const std::vector<int>& doc_universe,
                        const std::vector<int>& word_universe, std::int64_t steps);

/// One restart from a given seed.
FitResult fit_single(const BipartiteMultigraph& g, const InferenceConfig& cfg, std::uint64_t restart);

/// Best of cfg.n_restarts restarts (run concurrently), pure min over Σ.
FitResult fit(const BipartiteMultigraph& g, const InferenceConfig& cfg);

enum class LabelVariant { NoDocClustering, DocClustering };

/// State from true topic labels: no-doc-clustering puts doc d in group d and
/// word half-edges in group D + r (B = D + K); doc-clustering labels the
/// half-edges r and K + r (B = 2K). L = 1.
LabeledState labels_to_state(const BipartiteMultigraph& g, const std::vector<TopicCount>& labels, int K,
                             LabelVariant v);
ModelScore fixed_label_score(const LdaSample& sample, LabelVariant v);

}  // namespace topicblocks
