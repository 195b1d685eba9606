#include "iwm/envs/hike.hpp"

#include <algorithm>
#include <cmath>

namespace iwm::envs {

double MountainHikeEnv::altitude(double x, double y) {
  auto bump = [](double px, double py, double cx, double cy, double amp) {
    const double dx = px - cx, dy = py - cy;
    return amp * std::exp(-(dx * dx + dy * dy) / 0.18);
  };
  // secondary bump far enough that the global top stays at (0.7, 0.7)
  return bump(x, y, kTopX, kTopY, 1.0) + bump(x, y, -0.8, -0.9, 0.5);
}

MountainHikeEnv::MountainHikeEnv(bool altitude_obs, bool varying)
    : altitude_obs_(altitude_obs), varying_(varying) {}

EnvDescriptor MountainHikeEnv::descriptor() const {
  EnvDescriptor d;
  d.actions = {true, 4, {}};
  d.obs_dim = altitude_obs_ ? 1 : 2;
  d.info_dim = 6;  // x, y, one-hot orientation
  d.discount = 0.99;
  return d;
}

std::vector<double> MountainHikeEnv::observe() {
  if (altitude_obs_) return {altitude(x_, y_) + kObsNoise * rng_->normal()};
  return {x_ + kObsNoise * rng_->normal(), y_ + kObsNoise * rng_->normal()};
}

std::vector<double> MountainHikeEnv::inform() const {
  std::vector<double> i{x_, y_};
  for (int k = 0; k < 4; ++k) i.push_back(k == orientation_ ? 1.0 : 0.0);
  return i;
}

std::pair<std::vector<double>, std::vector<double>> MountainHikeEnv::reset(std::uint64_t seed) {
  rng_.emplace(seed);
  orientation_ = varying_ ? static_cast<int>(rng_->index(4)) : 0;
  x_ = rng_->uniform(-0.9, -0.7);
  y_ = rng_->uniform(-0.9, -0.7);
  t_ = 0;
  done_ = false;
  started_ = true;
  return {inform(), observe()};
}

InformedStep MountainHikeEnv::step(int action) {
  check(started_, "MountainHikeEnv: step before reset");
  check(!episode_over(), "MountainHikeEnv: episode is over, reset required");
  check(action >= 0 && action < 4, "MountainHikeEnv: action out of range");

  static constexpr double kDx[4] = {0.0, 1.0, 0.0, -1.0};
  static constexpr double kDy[4] = {1.0, 0.0, -1.0, 0.0};
  const int dir = (action + orientation_) % 4;
  x_ = std::clamp(x_ + kStep * kDx[dir], -1.0, 1.0);
  y_ = std::clamp(y_ + kStep * kDy[dir], -1.0, 1.0);
  ++t_;

  const double dx = x_ - kTopX, dy = y_ - kTopY;
  if (dx * dx + dy * dy <= kTopRadius * kTopRadius) done_ = true;

  InformedStep out;
  out.reward = altitude(x_, y_) - altitude(kTopX, kTopY);
  out.information = inform();
  out.observation = observe();
  out.continuation = !done_;
  return out;
}

}  // namespace iwm::envs
