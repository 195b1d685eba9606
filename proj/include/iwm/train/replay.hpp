#pragma once

#include <cstdint>
#include <vector>

#include "iwm/diff/rng.hpp"
#include "iwm/util/errors.hpp"

namespace iwm::train {

// One stored trajectory window: W positions of (a_{k-1}, r_{k-1}, i_k, o_k,
// c_k) plus the left-padding mask, flattened row-major over positions.
struct Window {
  std::vector<double> prev_action;
  std::vector<double> prev_reward;
  std::vector<double> info;
  std::vector<double> obs;
  std::vector<double> cont;
  std::vector<double> mask;
};

// Fixed-capacity ring with FIFO eviction and uniform sampling (with
// replacement). Stored windows are immutable.
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    check(capacity_ >= 1, "ReplayBuffer: capacity must be >= 1");
  }

  void add(Window w);
  const Window& sample(diff::Rng& rng) const;
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }

  // oldest-first access, for tests
  const Window& at_oldest(std::size_t i) const;

private:
  std::size_t capacity_;
  std::vector<Window> storage_;
  std::size_t next_ = 0;  // ring cursor once full
};

}  // namespace iwm::train
