#pragma once

#include <vector>

#include "iwm/diff/adam.hpp"
#include "iwm/diff/nn.hpp"
#include "iwm/diff/rng.hpp"
#include "iwm/wm/worldmodel.hpp"

namespace iwm::behavior {

struct PolicySpec {
  bool discrete = true;
  std::size_t n_actions = 0;
  std::vector<std::pair<double, double>> bounds;  // box actions
  std::size_t action_dim() const { return discrete ? n_actions : bounds.size(); }
};

// Latent policy g(a|z): categorical logits for finite action spaces, a
// tanh-squashed Gaussian for box spaces.
struct Policy {
  PolicySpec spec;
  diff::Mlp net;

  Policy() = default;
  Policy(PolicySpec s, std::size_t z_dim, std::size_t hidden, diff::Rng& rng);

  diff::ParamList params();

  int sample_discrete(const std::vector<double>& z, diff::Rng& rng) const;
  std::vector<double> sample_box(const std::vector<double>& z, diff::Rng& rng) const;
};

// Critic v(z), trained and evaluated in symlog space.
struct Critic {
  diff::Mlp net;

  Critic() = default;
  Critic(std::size_t z_dim, std::size_t hidden, diff::Rng& rng);

  diff::ParamList params();
  double value_raw(const std::vector<double>& z) const;  // symexp of the net output
};

// The subset of the world model reachable from imagination. The encoder is
// absent from this type, which makes "imagination never reads the encoder" a
// property of the call graph rather than a runtime convention.
struct ImaginationView {
  const diff::GruCell* recurrence;
  const diff::Mlp* prior;
  const diff::Mlp* reward_head;
  const diff::Mlp* cont_head;
  const wm::WorldModelConfig* cfg;
};

ImaginationView imagination_view(const wm::WorldModel& m);

// Flattened (z, e, a) triples taken from encode output, one row per valid
// (window, batch) pair.
struct ImaginationStarts {
  std::size_t count = 0;
  std::size_t z_dim = 0, e_dim = 0, a_dim = 0;
  std::vector<double> z, e, a;  // row-major [count x dim]
};

ImaginationStarts starts_from_encode(const wm::EncodeResult& enc, const wm::SequenceBatch& batch);

// Latent rollout under the prior and the policy, no observation access.
// Index k holds (z_k, e_k, a_k) plus predictions r_k (reward head mean),
// c_k (continuation probability aligned for the return recursion, c_0 coming
// from the start pair) and v_k (critic, raw space).
struct ImaginedTrajectory {
  std::size_t count = 0, horizon = 0;
  std::vector<std::vector<double>> z;           // [K][count*z_dim]
  std::vector<std::vector<double>> e;           // prior latents
  std::vector<std::vector<int>> action_index;   // discrete actions
  std::vector<std::vector<double>> action;      // encoded actions [K][count*a_dim]
  std::vector<std::vector<double>> reward;      // [K][count]
  std::vector<std::vector<double>> cont;        // [K][count]
  std::vector<std::vector<double>> value;       // [K][count]
};

ImaginedTrajectory imagine(const ImaginationView& view, const Policy& policy,
                           const Critic& critic, const ImaginationStarts& starts, std::size_t K,
                           diff::Rng& rng);

// Backward recursion G_k = r_k + gamma c_k ((1-lambda) v_{k+1} + lambda G_{k+1})
// with G_{K-1} = v_{K-1}; rewards and continuations carry K-1 entries, values K.
std::vector<double> lambda_returns(const std::vector<double>& rewards,
                                   const std::vector<double>& continuations,
                                   const std::vector<double>& values, double gamma,
                                   double lambda);

// Column-wise variant on the tape for pathwise (continuous-action) updates.
std::vector<diff::Value> lambda_returns_taped(const std::vector<diff::Value>& rewards,
                                              const std::vector<diff::Value>& continuations,
                                              const std::vector<diff::Value>& values,
                                              double gamma, double lambda);

// Per-start targets for a whole imagined trajectory -> [K][count].
std::vector<std::vector<double>> value_targets(const ImaginedTrajectory& traj, double gamma,
                                               double lambda);

// Running percentile range used to normalize advantages; scale is
// max(1, p95 - p5) of the return distribution, tracked by an EMA.
class ReturnNormalizer {
public:
  explicit ReturnNormalizer(double decay = 0.99) : decay_(decay) {}
  void update(std::vector<double> returns);
  double scale() const;

private:
  double decay_;
  double p5_ = 0.0, p95_ = 0.0;
  bool initialized_ = false;
};

struct PolicyUpdateStats {
  double objective = 0.0;
  double entropy = 0.0;
};

// REINFORCE with the critic baseline and an entropy bonus; gradients reach
// only the policy parameters (statistics enter as constants).
PolicyUpdateStats policy_update(Policy& policy, diff::Adam& opt, const ImaginedTrajectory& traj,
                                const std::vector<std::vector<double>>& targets,
                                ReturnNormalizer& normalizer, double entropy_weight);

// Pathwise objective for box actions: reparameterized actions, world model
// and critic bound as frozen constants, direct ascent on the lambda-returns.
PolicyUpdateStats policy_update_pathwise(Policy& policy, diff::Adam& opt,
                                         const ImaginationView& view, const Critic& critic,
                                         const ImaginationStarts& starts, std::size_t K,
                                         double gamma, double lambda, double entropy_weight,
                                         diff::Rng& rng);

// Symlog-space squared-error regression of v(z_k) onto stop-gradient targets.
double critic_update(Critic& critic, diff::Adam& opt, const ImaginedTrajectory& traj,
                     const std::vector<std::vector<double>>& targets);

}  // namespace iwm::behavior
