#pragma once

#include <memory>
#include <string>

#include "iwm/envs/env.hpp"

namespace iwm::envs {

// Environments addressed by string name:
//   "tiger"                 classic Tiger, horizon 20
//   "tmaze-<L>"             T-maze with corridor length L
//   "hike/<obs>-<init>"     Mountain Hike, obs in {pos, alt}, init in {fix, var}
//   "flicker(p=<x>):<name>" flickering wrapper around any registered name
//   "obsinfo:<name>"        information channel bound to the observation (i = o)
//   "tabular:<file.json>"   tabular informed POMDP from a JSON file, horizon 100
std::unique_ptr<Env> make_env(const std::string& name);

}  // namespace iwm::envs
