#pragma once

#include <vector>

#include "iwm/diff/graph.hpp"
#include "iwm/diff/rng.hpp"

namespace iwm::diff {

// Batched diagonal Gaussian: mean and stddev are [rows, dim], stddev > 0.
struct DiagGaussian {
  Value mean;
  Value stddev;

  std::size_t rows() const { return mean.rows(); }
  std::size_t dim() const { return mean.cols(); }
};

// Batched factored categorical: logits are [rows, groups*classes].
struct CategoricalLatent {
  Value logits;
  std::size_t groups = 1;
  std::size_t classes = 0;

  std::size_t rows() const { return logits.rows(); }
  std::size_t dim() const { return groups * classes; }
};

// Closed-form KL(p || q) per row -> [rows, 1].
Value kl_diag_gaussian(const DiagGaussian& p, const DiagGaussian& q);

// Exact categorical KL summed over groups, per row -> [rows, 1].
Value kl_categorical(const CategoricalLatent& p, const CategoricalLatent& q);

// mean + stddev * noise; gradients flow into mean and stddev.
Value reparam_sample(const DiagGaussian& d, const Tensor& noise);

// One-hot forward sample per group; straight-through gradient to the logits
// (identical to the gradient of the softmax-probabilities pathway).
// noise holds one uniform in [0,1) per (row, group).
Value reparam_sample(const CategoricalLatent& d, const Tensor& noise);

// Entropy per row -> [rows, 1] (nats).
Value entropy_categorical(Value logits);

// log N(target; mean, I) summed across dims, per row -> [rows, 1].
// target is plain data (no gradient).
Value gaussian_unit_logprob(Value mean, const Tensor& target);

// log Bernoulli(target; sigmoid(logit)) per row; logit and target are [rows,1].
Value bernoulli_logprob(Value logit, const Tensor& target);

}  // namespace iwm::diff
