#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "topicblocks/corpus.hpp"
#include "topicblocks/graph.hpp"
#include "topicblocks/inference.hpp"
#include "topicblocks/lda.hpp"
#include "topicblocks/model_score.hpp"
#include "topicblocks/sbm_core.hpp"
#include "topicblocks/util/math.hpp"

namespace topicblocks {

/// exp(-(Σ₁ - Σ₂)) with equal model priors.
double bayes_factor(double sigma_1, double sigma_2);
double log_bayes_factor(double sigma_1, double sigma_2);

// ---------------------------------------------------------------------------
// comparison tables

enum class ModelKind {
  LdaNoninformative,
  LdaTruePrior,
  HsbmFit,
  HsbmTrueLabels,           // doc i in its own group, B = D + K
  HsbmTrueLabelsClustered,  // B = 2K
};

ModelKind parse_model_kind(const std::string& s);
const char* model_kind_name(ModelKind k);
bool needs_labels(ModelKind k);

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::HsbmFit;
  InferenceConfig fit;  // HsbmFit only
};

struct ComparisonRow {
  std::string name;
  ModelKind kind = ModelKind::HsbmFit;
  ModelScore score;
  int K = 0;  // topics for LDA rows, 0 otherwise
  int doc_groups = 0;
  int word_groups = 0;
  int depth = 1;
  double per_token = 0.0;
  double delta = 0.0;  // Σ - Σ_baseline
  bool best = false;
};

struct ComparisonTable {
  int D = 0;
  int V = 0;
  std::int64_t tokens = 0;
  std::int64_t edges = 0;
  std::string baseline;
  std::vector<ComparisonRow> rows;

  int best_index() const;
  std::string to_tsv() const;
};

/// Fills ΔΣ against the row named `baseline` (default: the first
/// LDA-true-prior row, else the first row) and flags the minimum Σ once,
/// ties going to the earlier row.
void finalize_table(ComparisonTable& t, const std::string& baseline = "");

/// Scores every spec on the same input. Label-based specs need `sample`;
/// without one they are rejected.
ComparisonTable compare_models(const Corpus& corpus, const LdaSample* sample, const std::vector<ModelSpec>& specs,
                               const std::string& baseline = "");

// ---------------------------------------------------------------------------
// topic mixtures

struct TopicMixtures {
  Matrix theta;             // D x (number of word groups)
  std::vector<int> groups;  // word-group id of each column
  std::vector<char> undefined;  // per doc: k_d == 0
};

/// θ̂_dr = share of doc d's half-edges whose word-side label is r.
TopicMixtures topic_mixtures(const BipartiteMultigraph& g, const LabeledState& s);
/// θ̂ from topic labels n_dw^r.
TopicMixtures topic_mixtures(const std::vector<TopicCount>& labels, int D, int K);

/// Square bins of width 1/n over (x0, x1) restricted to the 2-simplex.
struct SimplexHistogram {
  int n = 0;
  std::vector<std::int64_t> counts;  // cell (i, j), i + j < n, at index(i, j)
  std::int64_t total = 0;

  std::size_t index(int i, int j) const;
  std::int64_t at(int i, int j) const { return counts[index(i, j)]; }
  std::string to_tsv() const;
};

/// Histogram of three-component rows; undefined rows are skipped.
SimplexHistogram simplex_histogram(const TopicMixtures& m, int n_bins = 20);

/// Modes as connected groups (8-neighbourhood) of cells holding at least
/// `min_fraction` of the rows.
int count_modes(const SimplexHistogram& h, double min_fraction = 0.02);

// ---------------------------------------------------------------------------
// dissemination

struct Dissemination {
  int word = 0;
  std::int64_t n_w = 0;
  int D_w = 0;
  double expected = 0.0;  // ⟨D_w⟩ under random token placement
  double U_D = 0.0;
};

/// Σ_d [1 - (1 - k_d/M)^{n_w}].
double null_doc_spread(const std::vector<std::int64_t>& doc_lengths, std::int64_t n_w);
Dissemination dissemination(const Corpus& corpus, int word);
/// All words with n_w > 0. The serial path is the reference.
std::vector<Dissemination> dissemination_all(const Corpus& corpus, bool parallel = true);

/// Keeps document lengths and word counts, places tokens uniformly at random.
Corpus shuffle_tokens(const Corpus& corpus, std::uint64_t seed);

struct NullCheck {
  double median = 0.0;  // median U_D on the shuffled corpus
  double sigma = 0.0;   // standard deviation of U_D across those words
  std::size_t words = 0;
  bool within = false;  // |median - 1| <= 2 sigma
};

/// U_D over words with n_w >= min_count on a token-shuffled copy of the
/// corpus.
NullCheck dissemination_null_check(const Corpus& corpus, std::uint64_t seed, std::int64_t min_count = 2);

double median(std::vector<double> v);
/// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> v, double q);

// ---------------------------------------------------------------------------
// group summaries

struct GroupSummary {
  int level = 1;
  int block = 0;
  Side side = Side::Word;
  std::int64_t tokens = 0;
  int members = 0;
  std::vector<std::pair<std::string, std::int64_t>> top_words;
  std::array<double, 5> ud_percentiles{};  // 5, 25, 50, 75, 95
  std::vector<std::string> sample_docs;
};

/// Listings for the blocks of one level (1 = groups). Throws InvalidInput
/// when level exceeds the depth.
std::vector<GroupSummary> group_summaries(const Corpus& corpus, const LabeledState& s, const Hierarchy& h,
                                          int level, std::uint64_t seed, int top_n = 5, int doc_samples = 5);

/// Adjusted Rand index of two hard labelings of the same items.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace topicblocks
