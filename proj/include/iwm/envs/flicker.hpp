#pragma once

#include <memory>
#include <optional>

#include "iwm/diff/rng.hpp"
#include "iwm/envs/env.hpp"

namespace iwm::envs {

// Replaces the observation with an all-zero blank (probability p) and appends
// a validity bit, so a genuinely zero observation stays distinguishable from
// a blank one. Information, reward, continuation and dynamics pass through
// unchanged; the wrapper draws from its own stream so the inner environment
// sees the same randomness as when unwrapped.
class FlickerEnv final : public Env {
public:
  FlickerEnv(std::unique_ptr<Env> inner, double p);

  EnvDescriptor descriptor() const override;
  std::pair<std::vector<double>, std::vector<double>> reset(std::uint64_t seed) override;
  InformedStep step(int action) override;
  bool episode_over() const override { return inner_->episode_over(); }

private:
  std::vector<double> apply(std::vector<double> obs);

  std::unique_ptr<Env> inner_;
  double p_;
  std::optional<diff::Rng> rng_;
};

}  // namespace iwm::envs
