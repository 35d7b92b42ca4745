#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <cstdint>
#include <vector>

#include "topicblocks/graph.hpp"
#include "topicblocks/lda.hpp"
#include "topicblocks/util/rng.hpp"

namespace oracle {

using namespace topicblocks;

/// Random labeled multigraph with self-loops allowed.
LabeledMultigraph random_multigraph(Rng& rng, int max_n, int max_e, int max_b);

/// P(𝒜 | k, e) by enumerating every perfect matching of the labeled stubs.
double pairing_probability(const LabeledMultigraph& m);

/// Literal transcription of the Poisson mixed-membership likelihood,
/// looping over every node pair and label pair.
double poisson_sbm_literal(const LabeledMultigraph& m, const MixedMembershipParams& p);

/// Brute-force list of partitions of m into exactly n parts.
std::int64_t enumerate_partitions(int m, int n);

/// Mean and standard error of P(n | η, θ, φ) with θ_d ~ Dir(α_d), φ_r ~ Dir(β_r).
struct McEstimate {
  double mean;
  double stderr_;
};
McEstimate lda_marginal_mc(const std::vector<TopicCount>& labels, const DirichletHyper& hyper,
                           const std::vector<double>& eta_d, std::int64_t draws, std::uint64_t seed,
                           bool parallel = true);

/// Compositions of `total` into `parts` parts, each at least `min_part`.
std::vector<std::vector<std::int64_t>> compositions(std::int64_t total, int parts,
                                                    std::int64_t min_part = 0);

/// Adjusted Rand index between two hard labelings.
double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace oracle
