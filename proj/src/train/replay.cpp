#include "iwm/train/replay.hpp"

namespace iwm::train {

void ReplayBuffer::add(Window w) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(w));
  } else {
    storage_[next_] = std::move(w);
    next_ = (next_ + 1) % capacity_;
  }
}

const Window& ReplayBuffer::sample(diff::Rng& rng) const {
  check(!storage_.empty(), "ReplayBuffer: sampling from an empty buffer");
  return storage_[rng.index(storage_.size())];
}

const Window& ReplayBuffer::at_oldest(std::size_t i) const {
  check(i < storage_.size(), "ReplayBuffer: index out of range");
  if (storage_.size() < capacity_) return storage_[i];
  return storage_[(next_ + i) % capacity_];
}

}  // namespace iwm::train
