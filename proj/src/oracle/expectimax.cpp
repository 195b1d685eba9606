#include "iwm/oracle/expectimax.hpp"

#include <cmath>
#include <cstdint>

namespace iwm::oracle {

using envs::TabularInformedPomdp;

namespace {

double expected_reward(const TabularInformedPomdp& p, const Belief& b, std::size_t a) {
  double r = 0.0;
  for (std::size_t s = 0; s < p.S; ++s) r += b[s] * p.R(s, a);
  return r;
}

struct HistoryRec {
  const TabularInformedPomdp& p;
  std::size_t max_nodes;
  HistoryPolicyValue out;

  double visit(const Belief& b, std::size_t depth, const std::string& h) {
    ++out.nodes;
    check(out.nodes <= max_nodes, "brute_force_value: history tree exceeds the node guard");
    if (depth == 0) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_a = 0;
    for (std::size_t a = 0; a < p.A; ++a) {
      double q = expected_reward(p, b, a);
      if (depth > 1 && p.gamma > 0.0) {
        double future = 0.0;
        for (std::size_t o = 0; o < p.O; ++o) {
          const double po = obs_probability(p, b, a, o);
          if (po <= 0.0) continue;
          const std::string h2 =
              h + (h.empty() ? "" : " ") + std::to_string(a) + "." + std::to_string(o);
          future += po * visit(belief_update(p, b, a, o), depth - 1, h2);
        }
        q += p.gamma * future;
      }
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    out.policy[h] = best_a;
    return best;
  }
};

// quantized key for merging beliefs within tolerance
std::vector<std::int64_t> quantize(const Belief& b, double tol) {
  std::vector<std::int64_t> key(b.size());
  for (std::size_t i = 0; i < b.size(); ++i)
    key[i] = static_cast<std::int64_t>(std::llround(b[i] / tol));
  return key;
}

struct BeliefRec {
  const TabularInformedPomdp& p;
  std::size_t max_nodes;
  double tol;
  std::map<std::pair<std::vector<std::int64_t>, std::size_t>, double> memo;

  double visit(const Belief& b, std::size_t depth) {
    if (depth == 0) return 0.0;
    auto key = std::make_pair(quantize(b, tol), depth);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    check(memo.size() < max_nodes, "belief_expectimax: belief set exceeds the node guard");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < p.A; ++a) {
      double q = expected_reward(p, b, a);
      if (depth > 1 && p.gamma > 0.0) {
        double future = 0.0;
        for (std::size_t o = 0; o < p.O; ++o) {
          const double po = obs_probability(p, b, a, o);
          if (po <= 0.0) continue;
          future += po * visit(belief_update(p, b, a, o), depth - 1);
        }
        q += p.gamma * future;
      }
      if (q > best) best = q;
    }
    memo.emplace(std::move(key), best);
    return best;
  }
};

}  // namespace

HistoryPolicyValue brute_force_value(const TabularInformedPomdp& p, std::size_t horizon,
                                     std::size_t max_nodes) {
  p.validate();
  HistoryRec rec{p, max_nodes, {}};
  rec.out.value = rec.visit(p.initial, horizon, "");
  return std::move(rec.out);
}

BeliefValue belief_expectimax(const TabularInformedPomdp& p, std::size_t horizon,
                              std::size_t max_nodes, double merge_tol) {
  p.validate();
  BeliefRec rec{p, max_nodes, merge_tol, {}};
  BeliefValue out;
  out.value = rec.visit(p.initial, horizon);
  out.nodes = rec.memo.size();
  return out;
}

}  // namespace iwm::oracle
