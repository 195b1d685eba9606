#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "iwm/diff/tensor.hpp"

namespace iwm::diff {

// Deterministic generator with self-contained sampling routines, so that
// equal seeds give bit-identical streams independently of the standard
// library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(splitmix(seed ^ 0x9e3779b97f4a7c15ull)) {
    // a couple of warmup rounds so nearby seeds decorrelate
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() {
    state_ = splitmix(state_);
    return state_;
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (no caching, so the stream layout is obvious)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // sample an index from unnormalized non-negative weights
  std::size_t categorical(const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    double u = uniform() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      u -= w[i];
      if (u <= 0.0) return i;
    }
    return w.size() - 1;
  }

  Tensor normal_tensor(std::size_t r, std::size_t c) {
    Tensor t({r, c});
    for (auto& x : t.data) x = normal();
    return t;
  }

  Tensor uniform_tensor(std::size_t r, std::size_t c) {
    Tensor t({r, c});
    for (auto& x : t.data) x = uniform();
    return t;
  }

  // independent stream for a named sub-purpose of a run seed
  static std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) {
    return splitmix(splitmix(seed) ^ (0xbf58476d1ce4e5b9ull * (stream + 1)));
  }

private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t state_;
};

}  // namespace iwm::diff
