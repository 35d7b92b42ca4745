#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace topicblocks {

using Rng = std::mt19937_64;

/// Seed for an independent substream derived from (seed, name, index).
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  return Rng(substream_seed(seed, name, index));
}

/// The std distributions are implementation-defined, so the samplers below
/// are written out to keep streams identical across standard libraries.
double uniform01(Rng& rng);
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
double standard_normal(Rng& rng);

/// log of a Gamma(shape, 1) variate; stays finite for very small shapes.
double log_gamma_variate(Rng& rng, double shape);

/// Dirichlet draw, normalized in log space.
std::vector<double> dirichlet(Rng& rng, std::span<const double> alpha);

/// Poisson draw (inversion for small means, PTRS otherwise).
std::int64_t poisson(Rng& rng, double mean);

/// Walker/Vose alias table for repeated categorical draws.
class AliasSampler {
 public:
  AliasSampler() = default;
  explicit AliasSampler(std::span<const double> weights);
  std::size_t operator()(Rng& rng) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

/// 64-bit FNV-1a, used for input digests and substream names.
std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace topicblocks
