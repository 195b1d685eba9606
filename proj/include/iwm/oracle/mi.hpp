#pragma once

#include <string>
#include <vector>

#include "iwm/oracle/belief.hpp"

namespace iwm::oracle {

// Conditional mutual informations I(s'; i' | h, a) and I(s'; o' | h, a)
// computed exactly from the enumerated joint at every history node up to the
// given depth. The data-processing inequality along s' -> i' -> o' demands
// info_mi >= obs_mi at every record.
struct MiRecord {
  std::string history;
  std::size_t action = 0;
  double reach = 0.0;  // p(h) under the enumeration policy
  double info_mi = 0.0;
  double obs_mi = 0.0;
};

// The enumeration policy must give every action positive probability;
// uniform when omitted.
std::vector<MiRecord> mi_comparison(const envs::TabularInformedPomdp& p, std::size_t depth,
                                    const std::vector<double>* action_probs = nullptr,
                                    std::size_t max_nodes = 1000000);

// Appendix-A factorization, mechanized: at every enumerated (h, a) the
// identity sum_i' p(o'|i') p(r, i'|h, a) = p(r, o'|h, a) must hold. Returns
// the largest absolute discrepancy found.
double markov_blanket_violation(const envs::TabularInformedPomdp& p, std::size_t depth,
                                std::size_t max_nodes = 1000000);

// Appendix-B gaps: E log p(r,i'|h,a) - E log p(r,i'|f(h),a) for the belief
// statistic (zero, since the predictive depends on h only through the
// belief) and for a constant statistic (non-negative, generally positive).
struct SufficiencyGaps {
  double belief_gap = 0.0;
  double constant_gap = 0.0;
};

SufficiencyGaps predictive_sufficiency_gaps(const envs::TabularInformedPomdp& p,
                                            std::size_t depth, std::size_t max_nodes = 1000000);

}  // namespace iwm::oracle
