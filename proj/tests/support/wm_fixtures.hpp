#pragma once

#include "iwm/diff/rng.hpp"
#include "iwm/wm/worldmodel.hpp"

namespace iwm::test {

inline wm::WorldModelConfig tiny_config(wm::LatentKind kind, std::size_t obs_dim = 3,
                                        std::size_t info_dim = 4, std::size_t action_dim = 2) {
  wm::WorldModelConfig cfg;
  cfg.obs_dim = obs_dim;
  cfg.info_dim = info_dim;
  cfg.action_dim = action_dim;
  cfg.z_dim = 6;
  cfg.hidden = 8;
  cfg.latent.kind = kind;
  cfg.latent.groups = 2;
  cfg.latent.classes = 2;
  cfg.latent.gaussian_dim = 3;
  cfg.kl_balance = 0.8;
  cfg.free_bits = 0.0;
  return cfg;
}

inline wm::SequenceBatch random_batch(const wm::WorldModelConfig& cfg, std::size_t n,
                                      std::size_t w, std::uint64_t seed,
                                      bool full_mask = true) {
  diff::Rng rng(seed);
  wm::SequenceBatch b;
  b.n = n;
  b.w = w;
  for (std::size_t k = 0; k < w; ++k) {
    diff::Tensor a({n, cfg.action_dim});
    if (k > 0)
      for (std::size_t r = 0; r < n; ++r) a.at(r, rng.index(cfg.action_dim)) = 1.0;
    b.prev_action.push_back(a);
    diff::Tensor r({n, 1});
    for (auto& v : r.data) v = rng.normal();
    b.prev_reward.push_back(r);
    diff::Tensor i({n, cfg.info_dim});
    for (auto& v : i.data) v = rng.normal();
    b.info.push_back(i);
    diff::Tensor o({n, cfg.obs_dim});
    for (auto& v : o.data) v = rng.normal();
    b.obs.push_back(o);
    b.cont.push_back(diff::Tensor::full(n, 1, 1.0));
    diff::Tensor m = diff::Tensor::full(n, 1, 1.0);
    if (!full_mask && k == 0)
      for (std::size_t r = 0; r < n; r += 2) m.at(r, 0) = 0.0;
    b.mask.push_back(m);
  }
  return b;
}

}  // namespace iwm::test
