#pragma once

#include <optional>
#include <vector>

#include "iwm/diff/dist.hpp"
#include "iwm/diff/graph.hpp"
#include "iwm/diff/nn.hpp"
#include "iwm/diff/rng.hpp"

namespace iwm::wm {

enum class LatentKind { kGaussian, kCategorical };

struct LatentSpec {
  LatentKind kind = LatentKind::kCategorical;
  std::size_t groups = 8, classes = 8;  // categorical layout
  std::size_t gaussian_dim = 32;

  std::size_t dim() const {
    return kind == LatentKind::kCategorical ? groups * classes : gaussian_dim;
  }
  // per-row noise: one uniform per group, or one normal per dimension
  std::size_t noise_dim() const {
    return kind == LatentKind::kCategorical ? groups : gaussian_dim;
  }
  std::size_t stat_dim() const {
    return kind == LatentKind::kCategorical ? groups * classes : 2 * gaussian_dim;
  }
};

struct WorldModelConfig {
  std::size_t obs_dim = 0, info_dim = 0, action_dim = 0;
  std::size_t z_dim = 128, hidden = 128;
  LatentSpec latent;
  double kl_balance = 0.8;  // alpha
  double free_bits = 1.0;   // beta, in nats
  // With balancing off the loss uses the plain (floored) KL, whose analytic
  // gradient is the true derivative of the forward value; finite-difference
  // checks need this mode because stop-gradients break the identity.
  bool kl_balancing = true;
};

// Latent distribution produced by the encoder or the prior.
struct LatentDist {
  LatentKind kind;
  diff::DiagGaussian gauss;
  diff::CategoricalLatent cat;

  std::size_t rows() const {
    return kind == LatentKind::kGaussian ? gauss.rows() : cat.rows();
  }
};

// The variational RNN: deterministic statistic z updated by a gated
// recurrent cell, stochastic latent e from encoder/prior heads, and the
// information / reward / continuation decoders. Reward and information are
// decoded as unit-variance Gaussians in symlog space, continuation as a
// Bernoulli.
struct WorldModel {
  WorldModelConfig cfg;
  diff::GruCell recurrence;  // input (a, e) -> z'
  diff::Mlp encoder;         // (z, a, o') -> latent stats
  diff::Mlp prior;           // (z, a) -> latent stats
  diff::Mlp info_head;       // (z, e) -> info mean in symlog space
  diff::Mlp reward_head;     // (z, e) -> reward mean in symlog space
  diff::Mlp cont_head;       // (z, e) -> continuation logit

  WorldModel() = default;
  WorldModel(WorldModelConfig cfg, diff::Rng& init_rng);

  diff::ParamList params();

  LatentDist dist_from_stats(diff::Graph& g, diff::Value raw) const;
  diff::Value sample_latent(const LatentDist& d, const diff::Tensor& noise) const;
};

// Training windows, one tensor of shape [n, dim] per window position.
// Position k carries (a_{k-1}, r_{k-1}, i_k, o_k, c_k) plus a validity mask
// that excludes left padding at episode starts.
struct SequenceBatch {
  std::size_t n = 0, w = 0;
  std::vector<diff::Tensor> prev_action;  // [n, action_dim]; entry 0 must be the null action
  std::vector<diff::Tensor> prev_reward;  // [n, 1]
  std::vector<diff::Tensor> info;         // [n, info_dim]
  std::vector<diff::Tensor> obs;          // [n, obs_dim]
  std::vector<diff::Tensor> cont;         // [n, 1]
  std::vector<diff::Tensor> mask;         // [n, 1]

  void null_first_action() {
    for (auto& v : prev_action.at(0).data) v = 0.0;
  }
};

struct NoiseBundle {
  std::vector<diff::Tensor> enc;  // one tensor per window position

  static NoiseBundle draw(const WorldModelConfig& cfg, std::size_t n, std::size_t w,
                          diff::Rng& rng);
};

// Output of the Encode procedure: index k holds the pair (z_{k-1}, e_{k-1})
// where e_{k-1} encodes o_k and z_{-1} = 0.
struct EncodeResult {
  std::vector<diff::Value> stat;     // [n, z_dim]
  std::vector<diff::Value> latent;   // [n, latent_dim]
  std::vector<LatentDist> post;      // posterior that produced latent[k]
  diff::Value last_stat;             // z_{W-1}, not used by the loss
};

EncodeResult encode_sequence(diff::Graph& g, const WorldModel& m, const SequenceBatch& b,
                             const NoiseBundle& noise);

// KL balancing with free bits: alpha * max(KL(sg(post)||prior), beta)
//                            + (1-alpha) * max(KL(post||sg(prior)), beta),
// where each KL is the (mask-weighted) batch mean.
diff::Value kl_regularizer(diff::Graph& g, const LatentDist& post, const LatentDist& prior,
                           double alpha, double beta,
                           const diff::Tensor* mask = nullptr);

struct LossBreakdown {
  double info_ll = 0.0;    // mean log-likelihood per valid position, nats
  double reward_ll = 0.0;
  double cont_ll = 0.0;
  double kl_raw = 0.0;     // mean KL before balancing/free bits
  double total_value = 0.0;
  diff::Value total;       // scalar node: -(info+reward+cont) + regularized KL
};

// Negative informed ELBO with a single posterior sample per step.
// Throws NonFiniteError naming the component that went non-finite.
// When enc_out is given, the encode pass that fed the loss is exposed there
// (imagination starts from exactly those pairs).
LossBreakdown elbo_loss(diff::Graph& g, const WorldModel& m, const SequenceBatch& b,
                        const NoiseBundle& noise, EncodeResult* enc_out = nullptr);

// Same objective with the latent marginalized exactly by enumerating every
// class combination along the window (categorical latents only; the path
// count (classes^groups)^w is guarded).
LossBreakdown elbo_loss_enumerated(diff::Graph& g, const WorldModel& m, const SequenceBatch& b,
                                   std::size_t max_paths = 4096);

struct Heads {
  diff::Value reward_symlog, reward_mean;  // [n,1]; mean is symexp'd to raw space
  diff::Value info_symlog, info_mean;      // [n,info_dim]
  diff::Value cont_logit, cont_prob;       // [n,1]
};

Heads decode_heads(diff::Graph& g, const WorldModel& m, diff::Value z, diff::Value e);

// --- tape-free forward path for acting, evaluation and imagination ---

// Encoder step of the execution policy: sample e ~ q^e(.|z,a,o'), update
// z' = u(z,a,e) in place. Returns the sampled latent.
std::vector<double> filter_step(const WorldModel& m, std::vector<double>& z,
                                const std::vector<double>& a_prev,
                                const std::vector<double>& obs, diff::Rng& rng);

// Plain-math latent sample from raw encoder/prior stats (batched rows).
std::vector<double> sample_latent_plain(const WorldModelConfig& cfg,
                                        const std::vector<double>& raw_stats, std::size_t rows,
                                        diff::Rng& rng);

}  // namespace iwm::wm
