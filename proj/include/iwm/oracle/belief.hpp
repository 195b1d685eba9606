#pragma once

#include <vector>

#include "iwm/envs/tabular.hpp"

namespace iwm::oracle {

using Belief = std::vector<double>;

// Bayes filter over the execution POMDP: b'(s') ~ O(o|s') sum_s T(s'|s,a) b(s)
// with the marginal channel O(o|s') = sum_i O~(o|i) I~(i|s').
// Throws on zero-probability evidence.
Belief belief_update(const envs::TabularInformedPomdp& p, const Belief& b, std::size_t a,
                     std::size_t o);

// p(o | b, a) under the execution POMDP.
double obs_probability(const envs::TabularInformedPomdp& p, const Belief& b, std::size_t a,
                       std::size_t o);

// Filtering distribution obtained by conditioning the enumerated joint
// p(s_0..s_t | a_0, o_1, ..., a_{t-1}, o_t) directly, no recursion.
Belief belief_by_direct_conditioning(const envs::TabularInformedPomdp& p,
                                     const std::vector<std::size_t>& actions,
                                     const std::vector<std::size_t>& observations);

// Exact expected undiscounted return of a memoryless policy over a horizon,
// by forward propagation of the state marginal.
double memoryless_policy_return(const envs::TabularInformedPomdp& p,
                                const std::vector<double>& action_probs, std::size_t horizon);

}  // namespace iwm::oracle
