#pragma once

#include <string>
#include <vector>

#include "iwm/diff/graph.hpp"
#include "iwm/diff/rng.hpp"
#include "iwm/diff/tensor.hpp"

namespace iwm::diff {

// Non-owning view of named parameter tensors; the unit the optimizer and the
// checkpoint code operate on. Parameter tensors themselves live inside the
// network objects and have value semantics.
struct NamedParam {
  std::string name;
  Tensor* tensor;
};

class ParamList {
public:
  void add(std::string name, Tensor& t) { items_.push_back({std::move(name), &t}); }
  void append(const ParamList& other) {
    items_.insert(items_.end(), other.items_.begin(), other.items_.end());
  }
  const std::vector<NamedParam>& items() const { return items_; }
  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += p.tensor->size();
    return n;
  }

private:
  std::vector<NamedParam> items_;
};

struct Dense {
  Tensor w;  // [in, out]
  Tensor b;  // [1, out]

  Dense() = default;
  Dense(std::size_t in, std::size_t out, Rng& rng) : w({in, out}), b({1, out}) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& x : w.data) x = rng.uniform(-limit, limit);
  }

  Value forward(Graph& g, Value x) const { return add_rowvec(matmul(x, g.param(w)), g.param(b)); }

  // tape-free path for interaction and imagination rollouts
  void forward_plain(const std::vector<double>& x, std::size_t rows,
                     std::vector<double>& out) const {
    const std::size_t in = w.rows(), n = w.cols();
    out.assign(rows * n, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double* orow = out.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) orow[c] = b.data[c];
      const double* xrow = x.data() + r * in;
      for (std::size_t p = 0; p < in; ++p) {
        const double xv = xrow[p];
        if (xv == 0.0) continue;
        const double* wrow = w.data.data() + p * n;
        for (std::size_t c = 0; c < n; ++c) orow[c] += xv * wrow[c];
      }
    }
  }

  void collect(ParamList& out, const std::string& prefix) {
    out.add(prefix + ".w", w);
    out.add(prefix + ".b", b);
  }
};

// Fully connected stack with tanh hidden activations and a linear output.
struct Mlp {
  std::vector<Dense> layers;

  Mlp() = default;
  Mlp(std::size_t in, std::vector<std::size_t> hidden, std::size_t out, Rng& rng) {
    std::size_t prev = in;
    for (auto h : hidden) {
      layers.emplace_back(prev, h, rng);
      prev = h;
    }
    layers.emplace_back(prev, out, rng);
  }

  std::size_t in_dim() const { return layers.front().w.rows(); }
  std::size_t out_dim() const { return layers.back().w.cols(); }

  Value forward(Graph& g, Value x) const {
    Value h = x;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) h = tanh(layers[i].forward(g, h));
    return layers.back().forward(g, h);
  }

  std::vector<double> forward_plain(const std::vector<double>& x, std::size_t rows) const {
    std::vector<double> h = x, next;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
      layers[i].forward_plain(h, rows, next);
      for (auto& v : next) v = std::tanh(v);
      h = next;
    }
    layers.back().forward_plain(h, rows, next);
    return next;
  }

  void collect(ParamList& out, const std::string& prefix) {
    for (std::size_t i = 0; i < layers.size(); ++i)
      layers[i].collect(out, prefix + "." + std::to_string(i));
  }
};

// Gated recurrent cell: update/reset gates and a tanh candidate.
struct GruCell {
  Tensor wx_u, wh_u, b_u;
  Tensor wx_r, wh_r, b_r;
  Tensor wx_c, wh_c, b_c;
  std::size_t input_dim = 0, state_dim = 0;

  GruCell() = default;
  GruCell(std::size_t in, std::size_t state, Rng& rng)
      : wx_u({in, state}),
        wh_u({state, state}),
        b_u({1, state}),
        wx_r({in, state}),
        wh_r({state, state}),
        b_r({1, state}),
        wx_c({in, state}),
        wh_c({state, state}),
        b_c({1, state}),
        input_dim(in),
        state_dim(state) {
    auto init = [&](Tensor& t, std::size_t fan_in, std::size_t fan_out) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (auto& x : t.data) x = rng.uniform(-limit, limit);
    };
    init(wx_u, in, state);
    init(wh_u, state, state);
    init(wx_r, in, state);
    init(wh_r, state, state);
    init(wx_c, in, state);
    init(wh_c, state, state);
  }

  // h' = h + u (cand - h), cand = tanh(x Wxc + (r h) Whc + bc)
  Value step(Graph& g, Value x, Value h) const {
    Value u = sigmoid(add_rowvec(add(matmul(x, g.param(wx_u)), matmul(h, g.param(wh_u))), g.param(b_u)));
    Value r = sigmoid(add_rowvec(add(matmul(x, g.param(wx_r)), matmul(h, g.param(wh_r))), g.param(b_r)));
    Value cand =
        tanh(add_rowvec(add(matmul(x, g.param(wx_c)), matmul(mul(r, h), g.param(wh_c))), g.param(b_c)));
    return add(h, mul(u, sub(cand, h)));
  }

  std::vector<double> step_plain(const std::vector<double>& x, const std::vector<double>& h,
                                 std::size_t rows) const {
    const std::size_t n = state_dim;
    auto affine = [&](const Tensor& wx, const Tensor& wh, const Tensor& b,
                      const std::vector<double>& hin) {
      std::vector<double> out(rows * n);
      for (std::size_t r = 0; r < rows; ++r) {
        double* orow = out.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) orow[c] = b.data[c];
        for (std::size_t p = 0; p < input_dim; ++p) {
          const double xv = x[r * input_dim + p];
          if (xv == 0.0) continue;
          const double* wrow = wx.data.data() + p * n;
          for (std::size_t c = 0; c < n; ++c) orow[c] += xv * wrow[c];
        }
        for (std::size_t p = 0; p < n; ++p) {
          const double hv = hin[r * n + p];
          if (hv == 0.0) continue;
          const double* wrow = wh.data.data() + p * n;
          for (std::size_t c = 0; c < n; ++c) orow[c] += hv * wrow[c];
        }
      }
      return out;
    };
    std::vector<double> u = affine(wx_u, wh_u, b_u, h);
    std::vector<double> r = affine(wx_r, wh_r, b_r, h);
    for (auto& v : u) v = 1.0 / (1.0 + std::exp(-v));
    for (auto& v : r) v = 1.0 / (1.0 + std::exp(-v));
    std::vector<double> rh(rows * n);
    for (std::size_t i = 0; i < rh.size(); ++i) rh[i] = r[i] * h[i];
    std::vector<double> cand = affine(wx_c, wh_c, b_c, rh);
    for (auto& v : cand) v = std::tanh(v);
    std::vector<double> out(rows * n);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = h[i] + u[i] * (cand[i] - h[i]);
    return out;
  }

  void collect(ParamList& out, const std::string& prefix) {
    out.add(prefix + ".wx_u", wx_u);
    out.add(prefix + ".wh_u", wh_u);
    out.add(prefix + ".b_u", b_u);
    out.add(prefix + ".wx_r", wx_r);
    out.add(prefix + ".wh_r", wh_r);
    out.add(prefix + ".b_r", b_r);
    out.add(prefix + ".wx_c", wx_c);
    out.add(prefix + ".wh_c", wh_c);
    out.add(prefix + ".b_c", b_c);
  }
};

}  // namespace iwm::diff
