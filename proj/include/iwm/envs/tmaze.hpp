#pragma once

#include <optional>

#include "iwm/diff/rng.hpp"
#include "iwm/envs/env.hpp"

namespace iwm::envs {

// T-maze with corridor length L: the goal side is shown only in the very
// first observation, the junction requires remembering it. Success +4,
// failure -0.1, terminal at either door, truncation after 8L steps.
// Information channel: (observation, goal side), available at every step.
class TMazeEnv final : public Env {
public:
  explicit TMazeEnv(std::size_t corridor_length);

  EnvDescriptor descriptor() const override;
  std::pair<std::vector<double>, std::vector<double>> reset(std::uint64_t seed) override;
  InformedStep step(int action) override;
  bool episode_over() const override { return done_ || t_ >= cap_; }

  static constexpr int kUp = 0, kDown = 1, kLeft = 2, kRight = 3;

private:
  std::vector<double> observe() const;
  std::vector<double> inform() const;

  std::size_t length_;
  std::size_t cap_;
  std::size_t pos_ = 0;
  std::size_t t_ = 0;
  bool goal_up_ = false;
  bool done_ = false;
  bool started_ = false;
};

}  // namespace iwm::envs
