#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "iwm/diff/rng.hpp"
#include "iwm/envs/env.hpp"

namespace iwm::envs {

// Finite informed POMDP (S, A, I, O, T, R, I~, O~, P, gamma) with the
// factorization s -> i -> o built into the representation: the observation
// table is indexed by information only.
struct TabularInformedPomdp {
  std::size_t S = 0, A = 0, I = 0, O = 0;
  std::vector<double> initial;  // [S]
  std::vector<double> trans;    // [S*A*S], row (s,a) is a distribution over s'
  std::vector<double> reward;   // [S*A]
  std::vector<double> info;     // [S*I], row s is I~(.|s)
  std::vector<double> obs;      // [I*O], row i is O~(.|i)
  double gamma = 0.95;

  double P(std::size_t s) const { return initial[s]; }
  double T(std::size_t s, std::size_t a, std::size_t s2) const {
    return trans[(s * A + a) * S + s2];
  }
  double R(std::size_t s, std::size_t a) const { return reward[s * A + a]; }
  double Itab(std::size_t s, std::size_t i) const { return info[s * I + i]; }
  double Otab(std::size_t i, std::size_t o) const { return obs[i * O + o]; }

  // marginal execution-POMDP channel O(o|s) = sum_i O~(o|i) I~(i|s)
  double obs_given_state(std::size_t s, std::size_t o) const {
    double p = 0.0;
    for (std::size_t i = 0; i < I; ++i) p += Otab(i, o) * Itab(s, i);
    return p;
  }

  // every probability row must sum to 1 within tol and be non-negative
  void validate(double tol = 1e-12) const;

  nlohmann::json to_json() const;
  static TabularInformedPomdp from_json(const nlohmann::json& j);
};

// Random instance with Dirichlet(1,...,1) rows; rewards uniform in [-1, 1].
// identity_info makes I~ the identity channel (forces |I| = |S|).
TabularInformedPomdp generate_tabular(std::size_t S, std::size_t A, std::size_t I, std::size_t O,
                                      std::uint64_t structure_seed, bool identity_info = false,
                                      double gamma = 0.95);

// Classic Tiger constants (-0.1 listen, +1 correct, -10 wrong, 0.85 cue
// accuracy, gamma 0.95) expressed as a 4-state informed tuple so that the
// observation depends on the information only: state = (tiger side, heard?).
TabularInformedPomdp tiger_pomdp();

// Runs a tabular informed POMDP as an environment with one-hot channels and
// time-limit truncation after `horizon` steps (continuation stays true).
class TabularEnv final : public Env {
public:
  TabularEnv(TabularInformedPomdp pomdp, std::size_t horizon);

  EnvDescriptor descriptor() const override;
  std::pair<std::vector<double>, std::vector<double>> reset(std::uint64_t seed) override;
  InformedStep step(int action) override;
  bool episode_over() const override { return t_ >= horizon_; }

  const TabularInformedPomdp& pomdp() const { return pomdp_; }

private:
  TabularInformedPomdp pomdp_;
  std::size_t horizon_;
  std::optional<diff::Rng> rng_;
  std::size_t state_ = 0;
  std::size_t t_ = 0;
  bool started_ = false;
};

}  // namespace iwm::envs
