#pragma once

#include <optional>

#include "iwm/diff/rng.hpp"
#include "iwm/envs/env.hpp"

namespace iwm::envs {

// Continuous 2D hike over a two-bump terrain with the top at (0.7, 0.7).
// Four actions move 0.05 in compass directions rotated by the initial
// orientation; the reward is the altitude relative to the top (always <= 0),
// states within radius 0.1 of the top are terminal, 160 steps truncate.
// Variants: observe noisy position or noisy altitude; fixed North or random
// initial orientation. Information channel: the full state (position and
// one-hot orientation).
class MountainHikeEnv final : public Env {
public:
  MountainHikeEnv(bool altitude_obs, bool varying);

  EnvDescriptor descriptor() const override;
  std::pair<std::vector<double>, std::vector<double>> reset(std::uint64_t seed) override;
  InformedStep step(int action) override;
  bool episode_over() const override { return done_ || t_ >= kMaxSteps; }

  static double altitude(double x, double y);
  static constexpr double kTopX = 0.7, kTopY = 0.7;
  static constexpr double kStep = 0.05;
  static constexpr double kObsNoise = 0.05;
  static constexpr double kTopRadius = 0.1;
  static constexpr std::size_t kMaxSteps = 160;

  int orientation() const { return orientation_; }
  std::pair<double, double> position() const { return {x_, y_}; }

private:
  std::vector<double> observe();
  std::vector<double> inform() const;

  bool altitude_obs_;
  bool varying_;
  std::optional<diff::Rng> rng_;
  double x_ = 0.0, y_ = 0.0;
  int orientation_ = 0;  // 0=N 1=E 2=S 3=W, fixed after reset
  std::size_t t_ = 0;
  bool done_ = false;
  bool started_ = false;
};

}  // namespace iwm::envs
