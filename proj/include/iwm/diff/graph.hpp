#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "iwm/diff/tensor.hpp"

namespace iwm::diff {

class Graph;

// Handle to a node of a computation record. Cheap to copy; owns nothing.
class Value {
public:
  Value() = default;
  Value(Graph* g, int id) : g_(g), id_(id) {}

  bool valid() const { return g_ != nullptr; }
  int id() const { return id_; }
  Graph* graph() const { return g_; }

  const Shape& shape() const;
  const std::vector<double>& data() const;
  const std::vector<double>& grad() const;
  std::size_t rows() const { return shape().empty() ? 1 : shape()[0]; }
  std::size_t cols() const { return shape().size() < 2 ? 1 : shape()[1]; }
  double item() const;

private:
  Graph* g_ = nullptr;
  int id_ = -1;
};

// Define-by-run computation record. Nodes are tensors; the record is rebuilt
// for every loss evaluation and is strictly single-threaded.
class Graph {
public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf that participates in differentiation (inputs, live parameters).
  Value input(const Tensor& t) { return leaf(t.shape, t.data, true); }
  // Leaf excluded from differentiation (batch data, noise, masks).
  Value constant(const Tensor& t) { return leaf(t.shape, t.data, false); }
  Value constant_scalar(double v) { return leaf({1, 1}, {v}, false); }

  // Parameter binding. Repeated binds of the same tensor within one record
  // return the same node so gradient contributions accumulate in one place.
  Value param(const Tensor& t);

  // While a FrozenScope is alive, param() binds parameters as constants.
  class FrozenScope {
  public:
    explicit FrozenScope(Graph& g) : g_(g) { ++g_.frozen_depth_; }
    ~FrozenScope() { --g_.frozen_depth_; }
    FrozenScope(const FrozenScope&) = delete;
    FrozenScope& operator=(const FrozenScope&) = delete;

  private:
    Graph& g_;
  };

  // Reverse sweep from a scalar root. Gradients of reachable differentiable
  // nodes are accumulated; everything else keeps a zero gradient.
  void backward(Value root);

  void reset_grads();

  // Gradient of a bound parameter after backward(); nullptr when the
  // parameter was never bound or is unreachable from the root.
  const std::vector<double>* param_grad(const Tensor& t) const;

  std::size_t num_nodes() const { return nodes_.size(); }

  // --- node access (used by ops and backward closures) ---
  const Shape& shape(int id) const { return nodes_[id].shape; }
  const std::vector<double>& val(int id) const { return nodes_[id].val; }
  const std::vector<double>& grad(int id) const;
  // Gradient accumulation buffer; nullptr when the node does not need one.
  std::vector<double>* grad_buf(int id);

  using BackFn = std::function<void(Graph&, int)>;
  Value make(Shape shape, std::vector<double> val, int p0, int p1, BackFn back);

private:
  struct Node {
    Shape shape;
    std::vector<double> val;
    std::vector<double> grad;
    int p0 = -1, p1 = -1;
    BackFn back;
    bool requires_grad = false;
    bool reached = false;
  };

  Value leaf(Shape shape, std::vector<double> data, bool requires_grad);

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> param_bindings_;
  std::vector<double> empty_grad_;
  int frozen_depth_ = 0;
  bool swept_ = false;
};

// ---- primitive operations ----

Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value divide(Value a, Value b);
Value add_rowvec(Value a, Value b);  // a:[m,n] + b:[1,n], broadcast over rows
Value scale(Value a, double c);
Value add_scalar(Value a, double c);
Value neg(Value a);
Value matmul(Value a, Value b);

Value tanh(Value a);
Value sigmoid(Value a);
Value exp(Value a);
Value log(Value a);
Value softplus(Value a);
Value symlog(Value a);
Value symexp(Value a);
Value square(Value a);
Value max_with(Value a, double floor);  // elementwise max(a, floor)

Value sum_all(Value a);   // -> [1,1]
Value mean_all(Value a);  // -> [1,1]
Value row_sum(Value a);   // [m,n] -> [m,1]

Value softmax_rows(Value a);
Value log_softmax_rows(Value a);
// Select one column per row: out[r,0] = a[r, idx[r]].
Value pick_cols(Value a, const std::vector<std::size_t>& idx);

Value slice_cols(Value a, std::size_t c0, std::size_t c1);  // half-open [c0,c1)
Value concat_cols(Value a, Value b);
Value reshape(Value a, Shape s);
Value detach(Value a);

}  // namespace iwm::diff
