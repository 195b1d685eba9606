#include "iwm/oracle/mi.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>

namespace iwm::oracle {

using envs::TabularInformedPomdp;

namespace {

std::vector<double> predicted_state(const TabularInformedPomdp& p, const Belief& b,
                                    std::size_t a) {
  std::vector<double> ps2(p.S, 0.0);
  for (std::size_t s2 = 0; s2 < p.S; ++s2)
    for (std::size_t s = 0; s < p.S; ++s) ps2[s2] += p.T(s, a, s2) * b[s];
  return ps2;
}

double mutual_information(const std::vector<double>& joint, std::size_t rows, std::size_t cols) {
  std::vector<double> pr(rows, 0.0), pc(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      pr[r] += joint[r * cols + c];
      pc[c] += joint[r * cols + c];
    }
  double mi = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double j = joint[r * cols + c];
      if (j > 0.0) mi += j * std::log(j / (pr[r] * pc[c]));
    }
  return mi;
}

void enumerate_histories(const TabularInformedPomdp& p, std::size_t depth, std::size_t max_nodes,
                         const std::vector<double>& pi,
                         const std::function<void(const Belief&, double, std::size_t,
                                                  const std::string&)>& visit) {
  std::size_t nodes = 0;
  std::function<void(const Belief&, double, std::size_t, const std::string&)> rec =
      [&](const Belief& b, double reach, std::size_t level, const std::string& h) {
        ++nodes;
        check(nodes <= max_nodes, "oracle enumeration exceeds the node guard");
        visit(b, reach, level, h);
        if (level + 1 >= depth) return;
        for (std::size_t a = 0; a < p.A; ++a)
          for (std::size_t o = 0; o < p.O; ++o) {
            const double po = obs_probability(p, b, a, o);
            if (po <= 0.0) continue;
            const std::string h2 =
                h + (h.empty() ? "" : " ") + std::to_string(a) + "." + std::to_string(o);
            rec(belief_update(p, b, a, o), reach * pi[a] * po, level + 1, h2);
          }
      };
  rec(p.initial, 1.0, 0, "");
}

// joint p(r, i' | b, a) over the finite reward atoms {R(s,a)}
std::map<double, std::vector<double>> reward_info_joint(const TabularInformedPomdp& p,
                                                        const Belief& b, std::size_t a) {
  std::map<double, std::vector<double>> out;
  for (std::size_t s = 0; s < p.S; ++s) {
    if (b[s] == 0.0) continue;
    auto& row = out.try_emplace(p.R(s, a), std::vector<double>(p.I, 0.0)).first->second;
    for (std::size_t s2 = 0; s2 < p.S; ++s2) {
      const double w = b[s] * p.T(s, a, s2);
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < p.I; ++i) row[i] += w * p.Itab(s2, i);
    }
  }
  return out;
}

std::vector<std::int64_t> quantize(const Belief& b, double tol) {
  std::vector<std::int64_t> key(b.size());
  for (std::size_t i = 0; i < b.size(); ++i)
    key[i] = static_cast<std::int64_t>(std::llround(b[i] / tol));
  return key;
}

}  // namespace

std::vector<MiRecord> mi_comparison(const TabularInformedPomdp& p, std::size_t depth,
                                    const std::vector<double>* action_probs,
                                    std::size_t max_nodes) {
  p.validate();
  check(depth >= 1, "mi_comparison: depth must be >= 1");
  std::vector<double> pi(p.A, 1.0 / static_cast<double>(p.A));
  if (action_probs) {
    check(action_probs->size() == p.A, "mi_comparison: policy size mismatch");
    for (double v : *action_probs) check(v > 0.0, "mi_comparison: policy must be positive");
    pi = *action_probs;
  }
  std::vector<MiRecord> records;
  enumerate_histories(p, depth, max_nodes, pi,
                      [&](const Belief& b, double reach, std::size_t, const std::string& h) {
                        for (std::size_t a = 0; a < p.A; ++a) {
                          const auto ps2 = predicted_state(p, b, a);
                          std::vector<double> j_si(p.S * p.I, 0.0);
                          for (std::size_t s2 = 0; s2 < p.S; ++s2)
                            for (std::size_t i = 0; i < p.I; ++i)
                              j_si[s2 * p.I + i] = ps2[s2] * p.Itab(s2, i);
                          std::vector<double> j_so(p.S * p.O, 0.0);
                          for (std::size_t s2 = 0; s2 < p.S; ++s2)
                            for (std::size_t i = 0; i < p.I; ++i) {
                              const double w = j_si[s2 * p.I + i];
                              if (w == 0.0) continue;
                              for (std::size_t o = 0; o < p.O; ++o)
                                j_so[s2 * p.O + o] += w * p.Otab(i, o);
                            }
                          records.push_back({h, a, reach, mutual_information(j_si, p.S, p.I),
                                             mutual_information(j_so, p.S, p.O)});
                        }
                      });
  return records;
}

double markov_blanket_violation(const TabularInformedPomdp& p, std::size_t depth,
                                std::size_t max_nodes) {
  p.validate();
  const std::vector<double> pi(p.A, 1.0 / static_cast<double>(p.A));
  double worst = 0.0;
  enumerate_histories(
      p, depth, max_nodes, pi,
      [&](const Belief& b, double, std::size_t, const std::string&) {
        for (std::size_t a = 0; a < p.A; ++a) {
          const auto joint_ri = reward_info_joint(p, b, a);
          for (const auto& [r, prob_i] : joint_ri) {
            // direct route: p(r, o'|h,a) from the full joint
            std::vector<double> direct(p.O, 0.0);
            for (std::size_t s = 0; s < p.S; ++s) {
              if (b[s] == 0.0 || p.R(s, a) != r) continue;
              for (std::size_t s2 = 0; s2 < p.S; ++s2) {
                const double w = b[s] * p.T(s, a, s2);
                if (w == 0.0) continue;
                for (std::size_t i = 0; i < p.I; ++i) {
                  const double wi = w * p.Itab(s2, i);
                  if (wi == 0.0) continue;
                  for (std::size_t o = 0; o < p.O; ++o) direct[o] += wi * p.Otab(i, o);
                }
              }
            }
            // factorized route through the Markov blanket of o'
            for (std::size_t o = 0; o < p.O; ++o) {
              double via_info = 0.0;
              for (std::size_t i = 0; i < p.I; ++i) via_info += p.Otab(i, o) * prob_i[i];
              worst = std::max(worst, std::abs(via_info - direct[o]));
            }
          }
        }
      });
  return worst;
}

SufficiencyGaps predictive_sufficiency_gaps(const TabularInformedPomdp& p, std::size_t depth,
                                            std::size_t max_nodes) {
  p.validate();
  const std::vector<double> pi(p.A, 1.0 / static_cast<double>(p.A));

  struct Node {
    Belief b;
    double reach;
  };
  std::vector<Node> leaves;
  enumerate_histories(p, depth, max_nodes, pi,
                      [&](const Belief& b, double reach, std::size_t level, const std::string&) {
                        if (level + 1 == depth) leaves.push_back({b, reach});
                      });

  // mixture predictive per statistic value; the belief statistic groups by
  // quantized belief, the constant statistic lumps every history together
  using Key = std::vector<std::int64_t>;
  std::map<std::pair<Key, std::size_t>, std::map<double, std::vector<double>>> belief_mix;
  std::map<std::size_t, std::map<double, std::vector<double>>> const_mix;
  std::map<std::pair<Key, std::size_t>, double> belief_mass;
  std::map<std::size_t, double> const_mass;

  auto accumulate = [&](auto& mix, double w, const std::map<double, std::vector<double>>& joint) {
    for (const auto& [r, probs] : joint) {
      auto& row = mix.try_emplace(r, std::vector<double>(p.I, 0.0)).first->second;
      for (std::size_t i = 0; i < p.I; ++i) row[i] += w * probs[i];
    }
  };

  for (const auto& node : leaves)
    for (std::size_t a = 0; a < p.A; ++a) {
      const auto joint = reward_info_joint(p, node.b, a);
      const auto key = std::make_pair(quantize(node.b, 1e-12), a);
      accumulate(belief_mix[key], node.reach, joint);
      belief_mass[key] += node.reach;
      accumulate(const_mix[a], node.reach, joint);
      const_mass[a] += node.reach;
    }

  SufficiencyGaps gaps;
  double e_exact = 0.0, e_belief = 0.0, e_const = 0.0;
  for (const auto& node : leaves)
    for (std::size_t a = 0; a < p.A; ++a) {
      const auto joint = reward_info_joint(p, node.b, a);
      const auto key = std::make_pair(quantize(node.b, 1e-12), a);
      const auto& bm = belief_mix.at(key);
      const double bmass = belief_mass.at(key);
      const auto& cm = const_mix.at(a);
      const double cmass = const_mass.at(a);
      for (const auto& [r, probs] : joint)
        for (std::size_t i = 0; i < p.I; ++i) {
          const double w = node.reach * pi[a] * probs[i];
          if (w <= 0.0) continue;
          e_exact += w * std::log(probs[i]);
          e_belief += w * std::log(bm.at(r)[i] / bmass);
          e_const += w * std::log(cm.at(r)[i] / cmass);
        }
    }
  gaps.belief_gap = e_exact - e_belief;
  gaps.constant_gap = e_exact - e_const;
  return gaps;
}

}  // namespace iwm::oracle
