#pragma once

#include "iwm/wm/worldmodel.hpp"

namespace iwm::oracle {

// Exact marginal log-likelihood of one batch row's window under the world
// model: log q(r, i, c | a, o) with the categorical latent path summed out
// by full enumeration (log-sum-exp over (classes^groups)^W paths). Assembled
// from the network forward passes and the density definitions directly,
// independent of the training-loss code path it is used to check. Masked
// positions contribute no likelihood but still branch the latent.
double exact_log_likelihood(const wm::WorldModel& m, const wm::SequenceBatch& b, std::size_t row,
                            std::size_t max_paths = 100000);

// Sum over all rows, normalized by the number of valid positions, the same
// normalization elbo_loss uses; -elbo_loss.total may never exceed this.
double exact_log_likelihood_mean(const wm::WorldModel& m, const wm::SequenceBatch& b,
                                 std::size_t max_paths = 100000);

}  // namespace iwm::oracle
