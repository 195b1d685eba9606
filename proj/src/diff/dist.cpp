#include "iwm/diff/dist.hpp"

#include <cmath>
#include <numbers>

namespace iwm::diff {

Value kl_diag_gaussian(const DiagGaussian& p, const DiagGaussian& q) {
  check(p.mean.shape() == q.mean.shape() && p.stddev.shape() == q.stddev.shape(),
        "kl_diag_gaussian: dimension mismatch");
  // log(sq/sp) + (sp^2 + (mp-mq)^2) / (2 sq^2) - 1/2, summed over dims
  Value log_ratio = sub(log(q.stddev), log(p.stddev));
  Value dm = sub(p.mean, q.mean);
  Value num = add(square(p.stddev), square(dm));
  Value den = scale(square(q.stddev), 2.0);
  Value per_dim = add_scalar(add(log_ratio, divide(num, den)), -0.5);
  return row_sum(per_dim);
}

Value kl_categorical(const CategoricalLatent& p, const CategoricalLatent& q) {
  check(p.groups == q.groups && p.classes == q.classes &&
            p.logits.shape() == q.logits.shape(),
        "kl_categorical: shape mismatch");
  const std::size_t rows = p.rows();
  Shape flat{rows * p.groups, p.classes};
  Value lp = log_softmax_rows(reshape(p.logits, flat));
  Value lq = log_softmax_rows(reshape(q.logits, flat));
  Value probs = exp(lp);
  Value per_group = row_sum(mul(probs, sub(lp, lq)));  // [rows*groups, 1]
  return row_sum(reshape(per_group, {rows, p.groups}));
}

Value reparam_sample(const DiagGaussian& d, const Tensor& noise) {
  check(noise.shape == d.mean.shape(), "reparam_sample: noise shape " + shape_str(noise.shape) +
                                           " does not match " + shape_str(d.mean.shape()));
  Graph& g = *d.mean.graph();
  return add(d.mean, mul(d.stddev, g.constant(noise)));
}

Value reparam_sample(const CategoricalLatent& d, const Tensor& noise) {
  check(noise.rows() == d.rows() && noise.cols() == d.groups,
        "reparam_sample: need one uniform per (row, group)");
  Graph& g = *d.logits.graph();
  const std::size_t rows = d.rows(), G = d.groups, C = d.classes;
  Value probs = softmax_rows(reshape(d.logits, {rows * G, C}));
  // inverse-CDF sample per group from the forward probabilities
  Tensor onehot({rows * G, C});
  const auto& pv = probs.data();
  for (std::size_t rg = 0; rg < rows * G; ++rg) {
    const double u = noise.data[(rg / G) * G + (rg % G)];
    double acc = 0.0;
    std::size_t pick = C - 1;
    for (std::size_t c = 0; c < C; ++c) {
      acc += pv[rg * C + c];
      if (u < acc) {
        pick = c;
        break;
      }
    }
    onehot.at(rg, pick) = 1.0;
  }
  // forward: exactly the one-hot; backward: gradient of the probs pathway
  Value shift = g.constant(Tensor(
      onehot.shape, [&] {
        std::vector<double> s(onehot.data.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = onehot.data[i] - pv[i];
        return s;
      }()));
  return reshape(add(probs, shift), {rows, G * C});
}

Value entropy_categorical(Value logits) {
  Value lsm = log_softmax_rows(logits);
  return neg(row_sum(mul(exp(lsm), lsm)));
}

Value gaussian_unit_logprob(Value mean, const Tensor& target) {
  check(target.shape == mean.shape(), "gaussian_unit_logprob: target shape mismatch");
  Graph& g = *mean.graph();
  const double c = -0.5 * std::log(2.0 * std::numbers::pi) * static_cast<double>(mean.cols());
  Value diff = sub(g.constant(target), mean);
  return add_scalar(scale(row_sum(square(diff)), -0.5), c);
}

Value bernoulli_logprob(Value logit, const Tensor& target) {
  check(target.shape == logit.shape(), "bernoulli_logprob: target shape mismatch");
  Graph& g = *logit.graph();
  Value t = g.constant(target);
  Tensor one_minus(target.shape);
  for (std::size_t i = 0; i < target.data.size(); ++i) one_minus.data[i] = 1.0 - target.data[i];
  Value tn = g.constant(one_minus);
  // log p = -t softplus(-x) - (1-t) softplus(x)
  return neg(add(mul(t, softplus(neg(logit))), mul(tn, softplus(logit))));
}

}  // namespace iwm::diff
