#include "iwm/diff/adam.hpp"

#include <cmath>

namespace iwm::diff {

Adam::Adam(ParamList params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.items().size());
  v_.reserve(params_.items().size());
  for (const auto& p : params_.items()) {
    m_.emplace_back(p.tensor->size(), 0.0);
    v_.emplace_back(p.tensor->size(), 0.0);
  }
}

void Adam::step(const Graph& g) {
  std::vector<std::vector<double>> grads;
  grads.reserve(params_.items().size());
  for (const auto& p : params_.items()) {
    const std::vector<double>* pg = g.param_grad(*p.tensor);
    grads.push_back(pg ? *pg : std::vector<double>(p.tensor->size(), 0.0));
  }
  step_with_grads(grads);
}

void Adam::step_with_grads(const std::vector<std::vector<double>>& grads) {
  check(grads.size() == params_.items().size(), "Adam: gradient count mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    check(grads[i].size() == params_.items()[i].tensor->size(),
          "Adam: gradient shape mismatch for " + params_.items()[i].name);
    for (double x : grads[i]) {
      if (!std::isfinite(x))
        throw NonFiniteError("Adam: non-finite gradient in parameter group '" +
                             params_.items()[i].name + "'");
      sq += x * x;
    }
  }
  const double norm = std::sqrt(sq);
  const double factor = norm > cfg_.clip_norm ? cfg_.clip_norm / norm : 1.0;

  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Tensor& t = *params_.items()[i].tensor;
    for (std::size_t j = 0; j < t.data.size(); ++j) {
      const double gj = grads[i][j] * factor;
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * gj;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * gj * gj;
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      t.data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace iwm::diff
