#include "iwm/diff/graph.hpp"

#include <algorithm>
#include <cmath>

namespace iwm::diff {

const Shape& Value::shape() const { return g_->shape(id_); }
const std::vector<double>& Value::data() const { return g_->val(id_); }
const std::vector<double>& Value::grad() const { return g_->grad(id_); }

double Value::item() const {
  check(data().size() == 1, "Value::item: not a scalar, shape " + shape_str(shape()));
  return data()[0];
}

Value Graph::leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  Node n;
  n.shape = std::move(shape);
  n.val = std::move(data);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Graph::param(const Tensor& t) {
  auto it = param_bindings_.find(&t);
  if (it != param_bindings_.end()) return Value(this, it->second);
  Value v = leaf(t.shape, t.data, frozen_depth_ == 0);
  param_bindings_.emplace(&t, v.id());
  return v;
}

Value Graph::make(Shape shape, std::vector<double> val, int p0, int p1, BackFn back) {
  Node n;
  n.shape = std::move(shape);
  n.val = std::move(val);
  n.p0 = p0;
  n.p1 = p1;
  n.requires_grad = (p0 >= 0 && nodes_[p0].requires_grad) || (p1 >= 0 && nodes_[p1].requires_grad);
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

const std::vector<double>& Graph::grad(int id) const {
  const Node& n = nodes_[id];
  if (n.grad.empty() && !n.val.empty()) {
    // never touched by a sweep: zero by definition
    const_cast<Node&>(n).grad.assign(n.val.size(), 0.0);
  }
  return n.grad;
}

std::vector<double>* Graph::grad_buf(int id) {
  Node& n = nodes_[id];
  if (!n.requires_grad || !n.reached) return nullptr;
  if (n.grad.empty()) n.grad.assign(n.val.size(), 0.0);
  return &n.grad;
}

void Graph::reset_grads() {
  for (auto& n : nodes_) {
    std::fill(n.grad.begin(), n.grad.end(), 0.0);
    n.reached = false;
  }
  swept_ = false;
}

void Graph::backward(Value root) {
  check(root.valid() && root.graph() == this, "backward: root is not a node of this record");
  check(numel(nodes_[root.id()].shape) == 1, "backward: root must be scalar, got shape " +
                                                 shape_str(nodes_[root.id()].shape));
  // mark the ancestor cone of the root
  std::vector<int> stack{root.id()};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    Node& n = nodes_[id];
    if (n.reached) continue;
    n.reached = true;
    if (n.p0 >= 0 && !nodes_[n.p0].reached) stack.push_back(n.p0);
    if (n.p1 >= 0 && !nodes_[n.p1].reached) stack.push_back(n.p1);
  }
  if (auto* g = grad_buf(root.id())) (*g)[0] += 1.0;
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.reached && n.requires_grad && n.back) n.back(*this, id);
  }
  swept_ = true;
}

const std::vector<double>* Graph::param_grad(const Tensor& t) const {
  auto it = param_bindings_.find(&t);
  if (it == param_bindings_.end()) return nullptr;
  const Node& n = nodes_[it->second];
  if (n.grad.empty()) return nullptr;
  return &n.grad;
}

// ---------------------------------------------------------------------------
// ops

namespace {

Graph& same_graph(Value a, Value b, const char* op) {
  check(a.valid() && b.valid() && a.graph() == b.graph(),
        std::string(op) + ": operands from different records");
  return *a.graph();
}

void check_same_shape(Value a, Value b, const char* op) {
  check(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

}  // namespace

Value add(Value a, Value b) {
  Graph& g = same_graph(a, b, "add");
  check_same_shape(a, b, "add");
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  const int pa = a.id(), pb = b.id();
  return g.make(a.shape(), std::move(out), pa, pb, [pa, pb](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
    if (auto* gb = gr.grad_buf(pb))
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] += go[i];
  });
}

Value sub(Value a, Value b) {
  Graph& g = same_graph(a, b, "sub");
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  const int pa = a.id(), pb = b.id();
  return g.make(a.shape(), std::move(out), pa, pb, [pa, pb](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
    if (auto* gb = gr.grad_buf(pb))
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] -= go[i];
  });
}

Value mul(Value a, Value b) {
  Graph& g = same_graph(a, b, "mul");
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  const int pa = a.id(), pb = b.id();
  return g.make(a.shape(), std::move(out), pa, pb, [pa, pb](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    const auto& va = gr.val(pa);
    const auto& vb = gr.val(pb);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] * vb[i];
    if (auto* gb = gr.grad_buf(pb))
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] += go[i] * va[i];
  });
}

Value divide(Value a, Value b) {
  Graph& g = same_graph(a, b, "divide");
  check_same_shape(a, b, "divide");
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] / b.data()[i];
  const int pa = a.id(), pb = b.id();
  return g.make(a.shape(), std::move(out), pa, pb, [pa, pb](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    const auto& va = gr.val(pa);
    const auto& vb = gr.val(pb);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] / vb[i];
    if (auto* gb = gr.grad_buf(pb))
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] -= go[i] * va[i] / (vb[i] * vb[i]);
  });
}

Value add_rowvec(Value a, Value b) {
  Graph& g = same_graph(a, b, "add_rowvec");
  const std::size_t m = a.rows(), n = a.cols();
  check(b.rows() == 1 && b.cols() == n,
        "add_rowvec: bias shape " + shape_str(b.shape()) + " does not broadcast over " +
            shape_str(a.shape()));
  std::vector<double> out(a.data().size());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = a.data()[r * n + c] + b.data()[c];
  const int pa = a.id(), pb = b.id();
  return g.make(a.shape(), std::move(out), pa, pb, [pa, pb, m, n](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
    if (auto* gb = gr.grad_buf(pb))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) (*gb)[c] += go[r * n + c];
  });
}

Value scale(Value a, double c) {
  Graph& g = *a.graph();
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
  const int pa = a.id();
  return g.make(a.shape(), std::move(out), pa, -1, [pa, c](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] * c;
  });
}

Value add_scalar(Value a, double c) {
  Graph& g = *a.graph();
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + c;
  const int pa = a.id();
  return g.make(a.shape(), std::move(out), pa, -1, [pa](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
  });
}

Value neg(Value a) { return scale(a, -1.0); }

Value matmul(Value a, Value b) {
  Graph& g = same_graph(a, b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  check(k == k2, "matmul: inner dimensions differ, " + shape_str(a.shape()) + " * " +
                     shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  const auto& va = a.data();
  const auto& vb = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = va[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = vb.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  const int pa = a.id(), pb = b.id();
  return g.make({m, n}, std::move(out), pa, pb, [pa, pb, m, k, n](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    const auto& va = gr.val(pa);
    const auto& vb = gr.val(pb);
    if (auto* ga = gr.grad_buf(pa)) {
      // dA = dC * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double go_ij = go[i * n + j];
          if (go_ij == 0.0) continue;
          const double* brow = vb.data() + j;  // column j of B
          double* garow = ga->data() + i * k;
          for (std::size_t p = 0; p < k; ++p) garow[p] += go_ij * brow[p * n];
        }
    }
    if (auto* gb = gr.grad_buf(pb)) {
      // dB = A^T * dC
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = va[i * k + p];
          if (aip == 0.0) continue;
          const double* gorow = go.data() + i * n;
          double* gbrow = gb->data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * gorow[j];
        }
    }
  });
}

namespace {

template <class F, class DF>
Value unary_elementwise(Value a, F f, DF df_from_in_out, const char*) {
  Graph& g = *a.graph();
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i]);
  const int pa = a.id();
  return g.make(a.shape(), std::move(out), pa, -1, [pa, df_from_in_out](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    const auto& vi = gr.val(pa);
    const auto& vo = gr.val(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] * df_from_in_out(vi[i], vo[i]);
  });
}

}  // namespace

Value tanh(Value a) {
  return unary_elementwise(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; }, "tanh");
}

Value sigmoid(Value a) {
  return unary_elementwise(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Value exp(Value a) {
  return unary_elementwise(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; }, "exp");
}

Value log(Value a) {
  return unary_elementwise(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; }, "log");
}

Value softplus(Value a) {
  return unary_elementwise(
      a,
      [](double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); }, "softplus");
}

Value symlog(Value a) {
  return unary_elementwise(
      a,
      [](double x) { return x >= 0.0 ? std::log1p(x) : -std::log1p(-x); },
      [](double x, double) { return 1.0 / (1.0 + std::abs(x)); }, "symlog");
}

Value symexp(Value a) {
  return unary_elementwise(
      a,
      [](double x) { return x >= 0.0 ? std::expm1(x) : -std::expm1(-x); },
      [](double x, double) { return std::exp(std::abs(x)); }, "symexp");
}

Value square(Value a) {
  return unary_elementwise(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; }, "square");
}

Value max_with(Value a, double floor) {
  Graph& g = *a.graph();
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(a.data()[i], floor);
  const int pa = a.id();
  return g.make(a.shape(), std::move(out), pa, -1, [pa, floor](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    const auto& vi = gr.val(pa);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i)
        if (vi[i] > floor) (*ga)[i] += go[i];
  });
}

Value sum_all(Value a) {
  Graph& g = *a.graph();
  double s = 0.0;
  for (double x : a.data()) s += x;
  const int pa = a.id();
  return g.make({1, 1}, {s}, pa, -1, [pa](Graph& gr, int id) {
    const double go = gr.grad(id)[0];
    if (auto* ga = gr.grad_buf(pa))
      for (auto& x : *ga) x += go;
  });
}

Value mean_all(Value a) {
  const double inv = 1.0 / static_cast<double>(a.data().size());
  return scale(sum_all(a), inv);
}

Value row_sum(Value a) {
  Graph& g = *a.graph();
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r] += a.data()[r * n + c];
  const int pa = a.id();
  return g.make({m, 1}, std::move(out), pa, -1, [pa, m, n](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) (*ga)[r * n + c] += go[r];
  });
}

Value softmax_rows(Value a) {
  Graph& g = *a.graph();
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = a.data().data() + r * n;
    double mx = row[0];
    for (std::size_t c = 1; c < n; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      out[r * n + c] = std::exp(row[c] - mx);
      z += out[r * n + c];
    }
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= z;
  }
  const int pa = a.id();
  return g.make(a.shape(), std::move(out), pa, -1, [pa, m, n](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    const auto& s = gr.val(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t r = 0; r < m; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < n; ++c) dot += go[r * n + c] * s[r * n + c];
        for (std::size_t c = 0; c < n; ++c)
          (*ga)[r * n + c] += s[r * n + c] * (go[r * n + c] - dot);
      }
  });
}

Value log_softmax_rows(Value a) {
  Graph& g = *a.graph();
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = a.data().data() + r * n;
    double mx = row[0];
    for (std::size_t c = 1; c < n; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += std::exp(row[c] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = row[c] - lz;
  }
  const int pa = a.id();
  return g.make(a.shape(), std::move(out), pa, -1, [pa, m, n](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    const auto& lsm = gr.val(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t r = 0; r < m; ++r) {
        double gsum = 0.0;
        for (std::size_t c = 0; c < n; ++c) gsum += go[r * n + c];
        for (std::size_t c = 0; c < n; ++c)
          (*ga)[r * n + c] += go[r * n + c] - std::exp(lsm[r * n + c]) * gsum;
      }
  });
}

Value pick_cols(Value a, const std::vector<std::size_t>& idx) {
  Graph& g = *a.graph();
  const std::size_t m = a.rows(), n = a.cols();
  check(idx.size() == m, "pick_cols: need one index per row");
  std::vector<double> out(m);
  for (std::size_t r = 0; r < m; ++r) {
    check(idx[r] < n, "pick_cols: index out of range");
    out[r] = a.data()[r * n + idx[r]];
  }
  const int pa = a.id();
  return g.make({m, 1}, std::move(out), pa, -1, [pa, idx, n](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t r = 0; r < idx.size(); ++r) (*ga)[r * n + idx[r]] += go[r];
  });
}

Value slice_cols(Value a, std::size_t c0, std::size_t c1) {
  Graph& g = *a.graph();
  const std::size_t m = a.rows(), n = a.cols();
  check(c0 < c1 && c1 <= n, "slice_cols: bad range");
  const std::size_t w = c1 - c0;
  std::vector<double> out(m * w);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = a.data()[r * n + c0 + c];
  const int pa = a.id();
  return g.make({m, w}, std::move(out), pa, -1, [pa, c0, w, n](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    const std::size_t m2 = gr.shape(id)[0];
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t r = 0; r < m2; ++r)
        for (std::size_t c = 0; c < w; ++c) (*ga)[r * n + c0 + c] += go[r * w + c];
  });
}

Value concat_cols(Value a, Value b) {
  Graph& g = same_graph(a, b, "concat_cols");
  const std::size_t m = a.rows(), na = a.cols(), nb = b.cols();
  check(b.rows() == m, "concat_cols: row counts differ");
  std::vector<double> out(m * (na + nb));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < na; ++c) out[r * (na + nb) + c] = a.data()[r * na + c];
    for (std::size_t c = 0; c < nb; ++c) out[r * (na + nb) + na + c] = b.data()[r * nb + c];
  }
  const int pa = a.id(), pb = b.id();
  return g.make({m, na + nb}, std::move(out), pa, pb, [pa, pb, m, na, nb](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < na; ++c) (*ga)[r * na + c] += go[r * (na + nb) + c];
    if (auto* gb = gr.grad_buf(pb))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < nb; ++c) (*gb)[r * nb + c] += go[r * (na + nb) + na + c];
  });
}

Value reshape(Value a, Shape s) {
  Graph& g = *a.graph();
  check(numel(s) == a.data().size(),
        "reshape: " + shape_str(a.shape()) + " -> " + shape_str(s) + " changes element count");
  const int pa = a.id();
  std::vector<double> out = a.data();
  return g.make(std::move(s), std::move(out), pa, -1, [pa](Graph& gr, int id) {
    const auto& go = gr.grad(id);
    if (auto* ga = gr.grad_buf(pa))
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
  });
}

Value detach(Value a) {
  Graph& g = *a.graph();
  return g.constant(Tensor(a.shape(), a.data()));
}

}  // namespace iwm::diff
