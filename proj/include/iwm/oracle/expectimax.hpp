#pragma once

#include <map>
#include <string>

#include "iwm/oracle/belief.hpp"

namespace iwm::oracle {

// Optimal finite-horizon value by exhaustive expectimax over the history
// tree (action-first: a_0, o_1, a_1, ...), discounted by gamma. The policy
// maps history strings "a0.o1 a1.o2 ..." prefixes to the argmax action,
// ties broken toward the smallest action index.
struct HistoryPolicyValue {
  double value = 0.0;
  std::map<std::string, std::size_t> policy;
  std::size_t nodes = 0;
};

HistoryPolicyValue brute_force_value(const envs::TabularInformedPomdp& p, std::size_t horizon,
                                     std::size_t max_nodes = 1000000);

// Same optimum computed over belief nodes, merging histories whose beliefs
// coincide within the quantization tolerance. Node count never exceeds the
// history tree's.
struct BeliefValue {
  double value = 0.0;
  std::size_t nodes = 0;
};

BeliefValue belief_expectimax(const envs::TabularInformedPomdp& p, std::size_t horizon,
                              std::size_t max_nodes = 1000000, double merge_tol = 1e-12);

}  // namespace iwm::oracle
