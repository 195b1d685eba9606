#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "iwm/util/errors.hpp"

namespace iwm::envs {

// One transition as sampled from an informed POMDP: the reward, the
// training-time information channel, the execution-time observation, and the
// continuation flag (false only at terminal states).
struct InformedStep {
  double reward = 0.0;
  std::vector<double> information;
  std::vector<double> observation;
  bool continuation = true;
};

struct ActionSpace {
  bool discrete = true;
  std::size_t n = 0;                                   // finite action count
  std::vector<std::pair<double, double>> bounds;       // box actions
  std::size_t dim() const { return discrete ? n : bounds.size(); }
};

struct EnvDescriptor {
  ActionSpace actions;
  std::size_t obs_dim = 0;
  std::size_t info_dim = 0;
  double discount = 0.99;
};

class Env {
public:
  virtual ~Env() = default;

  virtual EnvDescriptor descriptor() const = 0;

  // Starts a fresh episode; the pair is (information, observation) and the
  // continuation flag is implicitly true.
  virtual std::pair<std::vector<double>, std::vector<double>> reset(std::uint64_t seed) = 0;

  // Advances one step. Stepping a finished episode or passing an action
  // outside the space is a contract violation.
  virtual InformedStep step(int action) = 0;

  // True once the episode ended, by terminal state (continuation=false) or by
  // time-limit truncation (continuation stays true).
  virtual bool episode_over() const = 0;
};

inline std::vector<double> onehot(std::size_t idx, std::size_t n) {
  std::vector<double> v(n, 0.0);
  v[idx] = 1.0;
  return v;
}

}  // namespace iwm::envs
