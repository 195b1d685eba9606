#include "iwm/oracle/suites.hpp"

#include <cmath>

#include "iwm/oracle/elbo_exact.hpp"
#include "iwm/oracle/expectimax.hpp"
#include "iwm/oracle/mi.hpp"

namespace iwm::oracle {

namespace {

using envs::TabularInformedPomdp;
using envs::generate_tabular;

TabularInformedPomdp random_instance(diff::Rng& rng, bool identity_obs = false) {
  const std::size_t S = 2 + rng.index(3), A = 2 + rng.index(2);
  const std::size_t I = 2 + rng.index(3), O = 2 + rng.index(3);
  auto p = generate_tabular(S, A, I, O, rng.next_u64());
  if (identity_obs) {
    // o = i exactly: the equality case of the data-processing inequality
    p.O = p.I;
    p.obs.assign(p.I * p.I, 0.0);
    for (std::size_t i = 0; i < p.I; ++i) p.obs[i * p.I + i] = 1.0;
  }
  return p;
}

nlohmann::json mi_suite(std::size_t count, std::uint64_t seed) {
  diff::Rng rng(seed);
  nlohmann::json instances = nlohmann::json::array();
  std::size_t violations = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const bool identity = k % 5 == 4;  // every fifth instance tests o = i
    auto p = random_instance(rng, identity);
    auto records = mi_comparison(p, 2);
    double worst_drop = 0.0, worst_eq = 0.0;
    for (const auto& r : records) {
      worst_drop = std::max(worst_drop, r.obs_mi - r.info_mi);
      if (identity) worst_eq = std::max(worst_eq, std::abs(r.info_mi - r.obs_mi));
    }
    const bool ok = worst_drop <= 1e-12 && worst_eq <= 1e-12;
    if (!ok) ++violations;
    instances.push_back({{"identity_obs", identity},
                         {"nodes", records.size()},
                         {"max_dpi_violation", worst_drop},
                         {"max_equality_gap", worst_eq},
                         {"pass", ok}});
  }
  return {{"suite", "mi"},       {"count", count},           {"seed", seed},
          {"violations", violations}, {"pass", violations == 0}, {"instances", instances}};
}

nlohmann::json sufficiency_suite(std::size_t count, std::uint64_t seed) {
  diff::Rng rng(seed);
  nlohmann::json instances = nlohmann::json::array();
  std::size_t violations = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t S = 2 + rng.index(3), A = 2 + rng.index(3), O = 2 + rng.index(3);
    const std::size_t I = 2 + rng.index(3);
    auto p = generate_tabular(S, A, I, O, rng.next_u64());
    auto brute = brute_force_value(p, 3);
    auto belief = belief_expectimax(p, 3);
    const double gap = std::abs(brute.value - belief.value);
    const bool ok = gap <= 1e-9 && belief.nodes <= brute.nodes;
    if (!ok) ++violations;
    instances.push_back({{"history_value", brute.value},
                         {"belief_value", belief.value},
                         {"gap", gap},
                         {"history_nodes", brute.nodes},
                         {"belief_nodes", belief.nodes},
                         {"pass", ok}});
  }
  return {{"suite", "sufficiency"}, {"count", count},           {"seed", seed},
          {"violations", violations},    {"pass", violations == 0}, {"instances", instances}};
}

nlohmann::json markov_blanket_suite(std::size_t count, std::uint64_t seed) {
  diff::Rng rng(seed);
  nlohmann::json instances = nlohmann::json::array();
  std::size_t violations = 0;
  for (std::size_t k = 0; k < count; ++k) {
    auto p = random_instance(rng);
    const double worst = markov_blanket_violation(p, 2);
    const bool ok = worst <= 1e-12;
    if (!ok) ++violations;
    instances.push_back({{"max_violation", worst}, {"pass", ok}});
  }
  return {{"suite", "markov-blanket"}, {"count", count},           {"seed", seed},
          {"violations", violations},      {"pass", violations == 0}, {"instances", instances}};
}

nlohmann::json elbo_suite(std::size_t count, std::uint64_t seed) {
  diff::Rng rng(seed);
  nlohmann::json instances = nlohmann::json::array();
  std::size_t violations = 0;
  for (std::size_t k = 0; k < count; ++k) {
    wm::WorldModelConfig cfg;
    cfg.obs_dim = 2;
    cfg.info_dim = 2;
    cfg.action_dim = 2;
    cfg.z_dim = 6;
    cfg.hidden = 8;
    cfg.latent.kind = wm::LatentKind::kCategorical;
    cfg.latent.groups = 1;
    cfg.latent.classes = k % 4 == 3 ? 1 : 2;  // one-class case has no gap
    cfg.free_bits = 0.0;
    diff::Rng init(rng.next_u64());
    wm::WorldModel m(cfg, init);
    // random short windows
    wm::SequenceBatch b;
    b.n = 2;
    b.w = 3;
    for (std::size_t t = 0; t < b.w; ++t) {
      diff::Tensor a({b.n, cfg.action_dim});
      if (t > 0)
        for (std::size_t r = 0; r < b.n; ++r) a.at(r, init.index(cfg.action_dim)) = 1.0;
      b.prev_action.push_back(a);
      b.prev_reward.push_back(init.normal_tensor(b.n, 1));
      b.info.push_back(init.normal_tensor(b.n, cfg.info_dim));
      b.obs.push_back(init.normal_tensor(b.n, cfg.obs_dim));
      b.cont.push_back(diff::Tensor::full(b.n, 1, 1.0));
      b.mask.push_back(diff::Tensor::full(b.n, 1, 1.0));
    }
    diff::Graph g;
    auto loss = wm::elbo_loss_enumerated(g, m, b);
    const double ll = exact_log_likelihood_mean(m, b);
    const double bound_gap = ll - (-loss.total_value);  // must be >= 0
    const bool one_class = cfg.latent.classes == 1;
    const bool ok = bound_gap >= -1e-9 && (!one_class || std::abs(bound_gap) <= 1e-9);
    if (!ok) ++violations;
    instances.push_back({{"elbo", -loss.total_value},
                         {"exact_ll", ll},
                         {"gap", bound_gap},
                         {"one_class", one_class},
                         {"pass", ok}});
  }
  return {{"suite", "elbo"},     {"count", count},           {"seed", seed},
          {"violations", violations}, {"pass", violations == 0}, {"instances", instances}};
}

}  // namespace

nlohmann::json run_suite(const std::string& name, std::size_t count, std::uint64_t seed) {
  check(count >= 1, "run_suite: count must be >= 1");
  if (name == "mi") return mi_suite(count, seed);
  if (name == "sufficiency") return sufficiency_suite(count, seed);
  if (name == "markov-blanket") return markov_blanket_suite(count, seed);
  if (name == "elbo") return elbo_suite(count, seed);
  throw ContractViolation("run_suite: unknown suite '" + name +
                          "' (known: mi, sufficiency, elbo, markov-blanket)");
}

}  // namespace iwm::oracle
