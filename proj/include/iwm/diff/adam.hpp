#pragma once

#include <cstdint>
#include <vector>

#include "iwm/diff/graph.hpp"
#include "iwm/diff/nn.hpp"

namespace iwm::diff {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 100.0;  // global-norm clip applied before the update
};

// Adaptive-moment optimizer over a fixed collection of named parameters.
class Adam {
public:
  Adam() = default;
  Adam(ParamList params, AdamConfig cfg);

  // Reads gradients for each bound parameter from the record (zero when the
  // parameter is unreachable) and applies one clipped update in place.
  // Throws NonFiniteError naming the first offending parameter group.
  void step(const Graph& g);

  // Same, but with explicit gradients (aligned with the parameter list).
  void step_with_grads(const std::vector<std::vector<double>>& grads);

  std::int64_t step_count() const { return step_count_; }
  const ParamList& params() const { return params_; }
  const AdamConfig& config() const { return cfg_; }

private:
  ParamList params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t step_count_ = 0;
};

}  // namespace iwm::diff
