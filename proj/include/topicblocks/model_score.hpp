#pragma once

#include <string>
#include <utility>
#include <vector>

namespace topicblocks {

/// Description length in nats with its additive breakdown.
struct ModelScore {
  std::string model_id;
  std::string parametrization;
  std::vector<std::pair<std::string, double>> breakdown;  // term -> nats
  double sigma = 0.0;

  void add(std::string term, double nats) {
    breakdown.emplace_back(std::move(term), nats);
    sigma += nats;
  }
  double term(const std::string& name) const {
    for (const auto& [k, v] : breakdown)
      if (k == name) return v;
    return 0.0;
  }
  double breakdown_sum() const {
    double s = 0.0;
    for (const auto& kv : breakdown) s += kv.second;
    return s;
  }
};

}  // namespace topicblocks
