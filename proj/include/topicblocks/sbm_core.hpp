#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "topicblocks/graph.hpp"
#include "topicblocks/model_score.hpp"

namespace topicblocks {

// ---------------------------------------------------------------------------
// Flat (noninformative) model

/// log P(𝒜 | k, e) of the microcanonical model (log Ξ - log Ω). Self-loops at
/// node i with labels r < s contribute c! to the multiplicity, loops with
/// r = s contribute (2c)!!.
double logp_graph_given_ke(const LabeledMultigraph& m, const DerivedCounts& c);

/// -Σ_r log ((N e_r)).
double logp_k_flat(const DerivedCounts& c, std::int64_t N);

/// Geometric edge-count prior with mean omega_bar over the B(B+1)/2 entries.
/// E is the number of edges (diagonal entries hold twice their edges).
double logp_e_geometric(const std::vector<std::int64_t>& e, int B, double omega_bar);

/// Closed-form marginal of the Poisson SBM under noninformative priors on
/// κ and ω, evaluated directly from 𝒜.
double logp_marginal_flat(const LabeledMultigraph& m, double omega_bar);

// ---------------------------------------------------------------------------
// Overlapping partitions and labeled degrees

/// Mixtures of one side. Keys are sorted group lists.
struct OverlappingPartition {
  std::int64_t N = 0;  // nodes with nonzero degree
  int B = 0;           // groups available on this side
  int Q = 0;           // maximum mixture size; 0 means B
  std::map<std::vector<int>, std::int64_t> mixtures;  // 𝐛 -> n_𝐛
};

/// log P(b) = log P(n) + log P(q|n) + Σ_q [log P(n_𝐛^q|n_q) + log P(b_q|n_𝐛^q)].
/// Throws InvalidInput if a mixture is larger than Q.
double logp_overlap_partition(const OverlappingPartition& b);

/// Closed form of the above in terms of aggregate statistics.
double overlap_partition_term(std::int64_t N, int B, int Q, const std::vector<std::int64_t>& n_q,
                              double sum_log_fact_nb);

/// Labeled degrees of one mixture: for each component r, the degrees k_i^r
/// of the member nodes.
struct MixtureDegrees {
  std::vector<int> groups;
  std::vector<std::vector<std::int64_t>> degrees;  // degrees[c][member]
};

/// Σ_{r∈𝐛} [ -log p(e_𝐛^r, n_𝐛) + Σ_k log n_k! - log n_𝐛! ].
double mixture_degree_term(const MixtureDegrees& m);

/// Same from sufficient statistics of one component: degree sum e, member
/// count n and Σ_k log n_k!.
double component_degree_term(std::int64_t e, std::int64_t n, double sum_log_fact_hist);

/// -log ((m_r  e_r - S_r)) i.e. compositions of e_r - S_r into m_r parts.
double degree_sum_term(std::int64_t e_r, std::int64_t S_r, std::int64_t m_r);

/// log P(k | e, b) for one side: nodes given by their k_i (sorted (r, k)).
/// Throws IntegrityError if a node has a zero entry.
double logp_k_given_eb(const std::vector<std::vector<std::pair<int, std::int64_t>>>& k);

// ---------------------------------------------------------------------------
// Hierarchy

/// Level-l blocks with their edge counts and the map to level-(l+1) blocks.
struct LevelCounts {
  int B = 0;
  std::vector<Side> side;
  std::vector<std::int64_t> e;  // B x B, diagonal doubled
  std::vector<int> parent;      // empty at the top level
};

/// Partitions for levels above the first: parents[l][r] is the level-(l+2)
/// block containing level-(l+1) block r. Level 1 blocks are the groups of
/// the labeled state.
struct Hierarchy {
  std::vector<std::vector<int>> parents;
  int depth() const { return static_cast<int>(parents.size()) + 1; }
};

/// Aggregates e_1 up the hierarchy. Throws IntegrityError on a mixed-side
/// block or a parent index out of range, naming the level.
std::vector<LevelCounts> build_levels(int B, const std::vector<Side>& side,
                                      const std::vector<std::int64_t>& e1, const Hierarchy& h);

/// Nested edge prior for one level transition: edges of the parent
/// level spread over pairs of child blocks.
double level_edge_term(const LevelCounts& child, const LevelCounts& parent);

/// log P(b_l) for one side: n children in B parents with sizes n_r.
double level_partition_side(const std::vector<std::int64_t>& sizes);

/// Per-side partition prior of a level; -inf with `diagnostic` set if some
/// parent block mixes sides.
double logp_bipartite_partition(const LevelCounts& child, int parent_B, std::string* diagnostic = nullptr);

/// log P of the hierarchy part: Σ_l [edges + partition] plus the geometric
/// prior at the top with ω̄ = 2E/(B_L(B_L+1)). Verifies aggregation.
double logp_hierarchy(const std::vector<LevelCounts>& levels);

/// ω̄ used at the top level.
double top_omega_bar(const LevelCounts& top);

// ---------------------------------------------------------------------------
// Joint

struct JointOptions {
  int Q = 0;  // maximum overlap per node; 0 = unbounded
};

/// Σ_hSBM with a per-term breakdown. Empty groups are dropped before scoring.
ModelScore joint_logp(const BipartiteMultigraph& g, const LabeledState& s, const Hierarchy& h,
                      const JointOptions& opt = {});

/// Relabels groups to 0..B'-1 dropping those with no half-edges; returns
/// the old -> new map (-1 for dropped groups). Applies the same to `h`,
/// dropping empty upper blocks as well.
std::vector<int> compact_groups(LabeledState& s, Hierarchy& h);

}  // namespace topicblocks
