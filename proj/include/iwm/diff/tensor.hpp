#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "iwm/util/errors.hpp"

namespace iwm::diff {

// Tensors are row-major and at most rank 2 in practice: {rows, cols}.
// Scalars use {1, 1}, vectors {1, n} or {n, 1}.
using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(numel(shape), fill) {}
  Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    check(data.size() == numel(shape), "Tensor: data size does not match shape " + shape_str(shape));
  }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  double item() const {
    check(data.size() == 1, "Tensor::item: tensor is not scalar, shape " + shape_str(shape));
    return data[0];
  }

  static Tensor scalar(double v) { return Tensor({1, 1}, std::vector<double>{v}); }
  static Tensor row(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor({1, n}, std::move(v));
  }
  static Tensor zeros(std::size_t r, std::size_t c) { return Tensor({r, c}); }
  static Tensor full(std::size_t r, std::size_t c, double v) { return Tensor({r, c}, v); }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace iwm::diff
