#include "iwm/oracle/belief.hpp"

#include <cmath>

namespace iwm::oracle {

using envs::TabularInformedPomdp;

double obs_probability(const TabularInformedPomdp& p, const Belief& b, std::size_t a,
                       std::size_t o) {
  double total = 0.0;
  for (std::size_t s2 = 0; s2 < p.S; ++s2) {
    double pred = 0.0;
    for (std::size_t s = 0; s < p.S; ++s) pred += p.T(s, a, s2) * b[s];
    total += p.obs_given_state(s2, o) * pred;
  }
  return total;
}

Belief belief_update(const TabularInformedPomdp& p, const Belief& b, std::size_t a,
                     std::size_t o) {
  check(b.size() == p.S, "belief_update: belief size mismatch");
  check(a < p.A && o < p.O, "belief_update: action or observation out of range");
  Belief out(p.S, 0.0);
  double norm = 0.0;
  for (std::size_t s2 = 0; s2 < p.S; ++s2) {
    double pred = 0.0;
    for (std::size_t s = 0; s < p.S; ++s) pred += p.T(s, a, s2) * b[s];
    out[s2] = p.obs_given_state(s2, o) * pred;
    norm += out[s2];
  }
  check(norm > 0.0, "belief_update: impossible evidence, observation has zero probability");
  for (auto& v : out) v /= norm;
  return out;
}

Belief belief_by_direct_conditioning(const TabularInformedPomdp& p,
                                     const std::vector<std::size_t>& actions,
                                     const std::vector<std::size_t>& observations) {
  check(actions.size() == observations.size(),
        "belief_by_direct_conditioning: one observation per action");
  // alpha(s_t) = p(s_t, o_1..o_t | a_0..a_{t-1}), expanded without Bayes recursion
  std::vector<double> alpha(p.initial);
  for (std::size_t t = 0; t < actions.size(); ++t) {
    std::vector<double> next(p.S, 0.0);
    for (std::size_t s2 = 0; s2 < p.S; ++s2) {
      double acc = 0.0;
      for (std::size_t s = 0; s < p.S; ++s) acc += alpha[s] * p.T(s, actions[t], s2);
      next[s2] = acc * p.obs_given_state(s2, observations[t]);
    }
    alpha = std::move(next);
  }
  double norm = 0.0;
  for (double v : alpha) norm += v;
  check(norm > 0.0, "belief_by_direct_conditioning: impossible history");
  for (auto& v : alpha) v /= norm;
  return alpha;
}

double memoryless_policy_return(const TabularInformedPomdp& p,
                                const std::vector<double>& action_probs, std::size_t horizon) {
  check(action_probs.size() == p.A, "memoryless_policy_return: policy size mismatch");
  std::vector<double> mu(p.initial);
  double total = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t s = 0; s < p.S; ++s)
      for (std::size_t a = 0; a < p.A; ++a) total += mu[s] * action_probs[a] * p.R(s, a);
    std::vector<double> next(p.S, 0.0);
    for (std::size_t s = 0; s < p.S; ++s)
      for (std::size_t a = 0; a < p.A; ++a) {
        const double w = mu[s] * action_probs[a];
        if (w == 0.0) continue;
        for (std::size_t s2 = 0; s2 < p.S; ++s2) next[s2] += w * p.T(s, a, s2);
      }
    mu = std::move(next);
  }
  return total;
}

}  // namespace iwm::oracle
