#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "topicblocks/corpus.hpp"
#include "topicblocks/util/math.hpp"

namespace topicblocks {

enum class Side : std::uint8_t { Doc = 0, Word = 1 };

inline const char* side_name(Side s) { return s == Side::Doc ? "doc" : "word"; }

/// Word-document multigraph. Node ids: docs 0..D-1, words D..D+V-1.
struct BipartiteMultigraph {
  int D = 0;
  int V = 0;
  std::vector<CountEntry> edges;  // (d, w, A_dw), sorted, A_dw > 0
  std::int64_t E = 0;
  std::vector<std::int64_t> doc_degree;
  std::vector<std::int64_t> word_degree;

  int num_nodes() const { return D + V; }
  int word_node(int w) const { return D + w; }
};

BipartiteMultigraph from_counts(const Corpus& corpus);
BipartiteMultigraph make_graph(int D, int V, std::vector<CountEntry> edges);

/// n_dw^r: count of tokens of word w in doc d carrying topic r.
struct TopicCount {
  int d;
  int w;
  int r;
  std::int64_t count;
};

/// Labeled half-edge bundle: `count` edges between doc d and word w whose
/// doc-side half-edge is in group rd and word-side half-edge in group rw.
struct LabeledBundle {
  int d;
  int w;
  int rd;
  int rw;
  std::int64_t count;
  bool operator==(const LabeledBundle&) const = default;
};

struct LabeledState {
  int B = 0;
  std::vector<Side> side_of_group;
  std::vector<LabeledBundle> bundles;
};

/// Throws IntegrityError if label mass per (d, w) differs from A_dw or a
/// half-edge sits in a group of the wrong side.
void validate_state(const BipartiteMultigraph& g, const LabeledState& s);

/// Merges duplicate bundles and drops empty ones; sorted output.
void canonicalize(LabeledState& s);

/// General labeled multigraph: edge i-j with i's half-edge in r and j's in s.
struct HalfEdgeBundle {
  int i;
  int j;
  int r;
  int s;
  std::int64_t count;
};

struct LabeledMultigraph {
  int N = 0;
  int B = 0;
  std::vector<HalfEdgeBundle> bundles;
};

LabeledMultigraph to_multigraph(const BipartiteMultigraph& g, const LabeledState& s);

/// Canonical 𝒜 entries: (i < j) or (i == j and r <= s), merged, count > 0.
std::vector<HalfEdgeBundle> canonical_entries(const LabeledMultigraph& m);

struct DerivedCounts {
  int B = 0;
  std::int64_t E = 0;
  std::vector<std::int64_t> e;    // B x B, e_rr counts internal edges twice
  std::vector<std::int64_t> e_r;  // row sums
  /// k[i] = sorted (r, k_i^r) with k_i^r > 0
  std::vector<std::vector<std::pair<int, std::int64_t>>> k;

  std::int64_t ers(int r, int s) const {
    return e[static_cast<std::size_t>(r) * static_cast<std::size_t>(B) + static_cast<std::size_t>(s)];
  }
};

DerivedCounts derive_counts(const LabeledMultigraph& m);
DerivedCounts derive_counts(const BipartiteMultigraph& g, const LabeledState& s);

struct MixedMembershipParams {
  Matrix kappa;  // N x B
  Matrix omega;  // B x B, symmetric
};

/// Poisson mixed-membership SBM log-likelihood. A self-loop at i with labels
/// r = s has mean kappa_ir omega_rr kappa_ir / 2, with r < s mean
/// kappa_ir omega_rs kappa_is, so the total mean is (Σκ)ᵀω(Σκ)/2.
double poisson_sbm_loglik(const LabeledMultigraph& m, const MixedMembershipParams& p);

/// pLSI parameters rewritten as Poisson SBM rates.
struct PlsiSbmParams {
  std::vector<double> eta_d;
  std::vector<double> eta_w;
  Matrix theta;      // D x K
  Matrix phi_prime;  // V x K
  std::vector<char> unreachable;  // per word: Σ_r φ_rw == 0

  double lambda(int d, int w, int r) const {
    return eta_d[static_cast<std::size_t>(d)] * eta_w[static_cast<std::size_t>(w)] *
           theta(static_cast<std::size_t>(d), static_cast<std::size_t>(r)) *
           phi_prime(static_cast<std::size_t>(w), static_cast<std::size_t>(r));
  }
};

PlsiSbmParams plsi_to_sbm_params(const std::vector<double>& eta_d, const Matrix& theta,
                                 const Matrix& phi);

/// Product of independent Poissons over all (d, w, r) with rates λ_dw^r.
double poisson_product_loglik(const std::vector<TopicCount>& labels, const PlsiSbmParams& p);

}  // namespace topicblocks
