#include "iwm/envs/tmaze.hpp"

namespace iwm::envs {

TMazeEnv::TMazeEnv(std::size_t corridor_length)
    : length_(corridor_length), cap_(8 * corridor_length) {
  check(length_ >= 1, "TMazeEnv: corridor length must be >= 1");
}

EnvDescriptor TMazeEnv::descriptor() const {
  EnvDescriptor d;
  d.actions = {true, 4, {}};
  d.obs_dim = 4;   // cue-up, cue-down, corridor, junction
  d.info_dim = 6;  // observation plus one-hot goal side
  d.discount = 0.98;
  return d;
}

std::vector<double> TMazeEnv::observe() const {
  std::vector<double> o(4, 0.0);
  if (t_ == 0) {
    o[goal_up_ ? 0 : 1] = 1.0;  // the cue, shown at the first step only
  } else if (pos_ < length_) {
    o[2] = 1.0;
  } else {
    o[3] = 1.0;
  }
  return o;
}

std::vector<double> TMazeEnv::inform() const {
  std::vector<double> i = observe();
  i.push_back(goal_up_ ? 1.0 : 0.0);
  i.push_back(goal_up_ ? 0.0 : 1.0);
  return i;
}

std::pair<std::vector<double>, std::vector<double>> TMazeEnv::reset(std::uint64_t seed) {
  diff::Rng rng(seed);
  goal_up_ = rng.uniform() < 0.5;
  pos_ = 0;
  t_ = 0;
  done_ = false;
  started_ = true;
  return {inform(), observe()};
}

InformedStep TMazeEnv::step(int action) {
  check(started_, "TMazeEnv: step before reset");
  check(!episode_over(), "TMazeEnv: episode is over, reset required");
  check(action >= 0 && action < 4, "TMazeEnv: action out of range");

  InformedStep out;
  out.reward = 0.0;
  if (pos_ == length_) {
    if (action == kUp || action == kDown) {
      const bool correct = (action == kUp) == goal_up_;
      out.reward = correct ? 4.0 : -0.1;
      done_ = true;
    }
  } else {
    if (action == kRight) ++pos_;
    if (action == kLeft && pos_ > 0) --pos_;
  }
  ++t_;
  out.information = inform();
  out.observation = observe();
  out.continuation = !done_;
  return out;
}

}  // namespace iwm::envs
