#include "iwm/envs/flicker.hpp"

namespace iwm::envs {

FlickerEnv::FlickerEnv(std::unique_ptr<Env> inner, double p) : inner_(std::move(inner)), p_(p) {
  check(p_ >= 0.0 && p_ <= 1.0, "FlickerEnv: p must be in [0,1]");
}

EnvDescriptor FlickerEnv::descriptor() const {
  EnvDescriptor d = inner_->descriptor();
  d.obs_dim += 1;  // validity bit
  return d;
}

std::vector<double> FlickerEnv::apply(std::vector<double> obs) {
  const bool blank = rng_->uniform() < p_;
  if (blank) std::fill(obs.begin(), obs.end(), 0.0);
  obs.push_back(blank ? 0.0 : 1.0);
  return obs;
}

std::pair<std::vector<double>, std::vector<double>> FlickerEnv::reset(std::uint64_t seed) {
  rng_.emplace(seed ^ 0xf11c4e2ull);
  auto [info, obs] = inner_->reset(seed);
  return {std::move(info), apply(std::move(obs))};
}

InformedStep FlickerEnv::step(int action) {
  check(rng_.has_value(), "FlickerEnv: step before reset");
  InformedStep s = inner_->step(action);
  s.observation = apply(std::move(s.observation));
  return s;
}

}  // namespace iwm::envs
