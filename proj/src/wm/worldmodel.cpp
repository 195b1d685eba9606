#include "iwm/wm/worldmodel.hpp"

#include <cmath>

#include "iwm/diff/scalar.hpp"

namespace iwm::wm {

using namespace iwm::diff;

WorldModel::WorldModel(WorldModelConfig config, Rng& rng) : cfg(config) {
  const std::size_t e_dim = cfg.latent.dim();
  recurrence = GruCell(cfg.action_dim + e_dim, cfg.z_dim, rng);
  encoder = Mlp(cfg.z_dim + cfg.action_dim + cfg.obs_dim, {cfg.hidden}, cfg.latent.stat_dim(), rng);
  prior = Mlp(cfg.z_dim + cfg.action_dim, {cfg.hidden}, cfg.latent.stat_dim(), rng);
  info_head = Mlp(cfg.z_dim + e_dim, {cfg.hidden}, cfg.info_dim, rng);
  reward_head = Mlp(cfg.z_dim + e_dim, {cfg.hidden}, 1, rng);
  cont_head = Mlp(cfg.z_dim + e_dim, {cfg.hidden}, 1, rng);
}

ParamList WorldModel::params() {
  ParamList out;
  recurrence.collect(out, "wm.rec");
  encoder.collect(out, "wm.enc");
  prior.collect(out, "wm.prior");
  info_head.collect(out, "wm.info");
  reward_head.collect(out, "wm.rew");
  cont_head.collect(out, "wm.cont");
  return out;
}

LatentDist WorldModel::dist_from_stats(Graph& g, Value raw) const {
  (void)g;
  LatentDist d;
  d.kind = cfg.latent.kind;
  if (cfg.latent.kind == LatentKind::kGaussian) {
    const std::size_t n = cfg.latent.gaussian_dim;
    d.gauss.mean = slice_cols(raw, 0, n);
    // softplus floor keeps the KL away from its singularities
    d.gauss.stddev = add_scalar(softplus(slice_cols(raw, n, 2 * n)), 1e-4);
  } else {
    d.cat.logits = raw;
    d.cat.groups = cfg.latent.groups;
    d.cat.classes = cfg.latent.classes;
  }
  return d;
}

Value WorldModel::sample_latent(const LatentDist& d, const Tensor& noise) const {
  if (d.kind == LatentKind::kGaussian) return reparam_sample(d.gauss, noise);
  return reparam_sample(d.cat, noise);
}

NoiseBundle NoiseBundle::draw(const WorldModelConfig& cfg, std::size_t n, std::size_t w,
                              Rng& rng) {
  NoiseBundle out;
  out.enc.reserve(w);
  for (std::size_t k = 0; k < w; ++k) {
    if (cfg.latent.kind == LatentKind::kGaussian)
      out.enc.push_back(rng.normal_tensor(n, cfg.latent.noise_dim()));
    else
      out.enc.push_back(rng.uniform_tensor(n, cfg.latent.noise_dim()));
  }
  return out;
}

namespace {

Value latent_kl(const LatentDist& p, const LatentDist& q) {
  check(p.kind == q.kind, "latent KL: mixed latent kinds");
  if (p.kind == LatentKind::kGaussian) return kl_diag_gaussian(p.gauss, q.gauss);
  return kl_categorical(p.cat, q.cat);
}

LatentDist detach_dist(Graph& g, const LatentDist& d) {
  (void)g;
  LatentDist out = d;
  if (d.kind == LatentKind::kGaussian) {
    out.gauss.mean = detach(d.gauss.mean);
    out.gauss.stddev = detach(d.gauss.stddev);
  } else {
    out.cat.logits = detach(d.cat.logits);
  }
  return out;
}

double mask_count(const Tensor* mask, std::size_t rows) {
  if (!mask) return static_cast<double>(rows);
  double c = 0.0;
  for (double v : mask->data) c += v;
  return c;
}

// mask-weighted batch mean of a [n,1] column
Value masked_mean(Graph& g, Value col, const Tensor* mask, double count) {
  Value x = col;
  if (mask) x = mul(x, g.constant(*mask));
  return scale(sum_all(x), 1.0 / count);
}

void require_finite(double v, const char* component) {
  if (!std::isfinite(v))
    throw NonFiniteError(std::string("elbo_loss: non-finite ") + component + " component");
}

}  // namespace

EncodeResult encode_sequence(Graph& g, const WorldModel& m, const SequenceBatch& b,
                             const NoiseBundle& noise) {
  check(b.w >= 1, "encode_sequence: window length must be >= 1");
  check(noise.enc.size() == b.w, "encode_sequence: noise bundle length mismatch");
  check(b.obs.at(0).cols() == m.cfg.obs_dim && b.prev_action.at(0).cols() == m.cfg.action_dim,
        "encode_sequence: batch does not match the model descriptor");

  EncodeResult out;
  Value z = g.constant(Tensor::zeros(b.n, m.cfg.z_dim));  // z_{-1} = 0
  for (std::size_t k = 0; k < b.w; ++k) {
    Value a = g.constant(b.prev_action[k]);
    Value o = g.constant(b.obs[k]);
    LatentDist post = m.dist_from_stats(g, m.encoder.forward(g, concat_cols(concat_cols(z, a), o)));
    Value e = m.sample_latent(post, noise.enc[k]);
    out.stat.push_back(z);
    out.latent.push_back(e);
    out.post.push_back(post);
    z = m.recurrence.step(g, concat_cols(a, e), z);
  }
  out.last_stat = z;
  return out;
}

Value kl_regularizer(Graph& g, const LatentDist& post, const LatentDist& prior, double alpha,
                     double beta, const Tensor* mask) {
  check(alpha >= 0.0 && alpha <= 1.0, "kl_regularizer: balance must be in [0,1]");
  check(beta >= 0.0, "kl_regularizer: free bits must be >= 0");
  const double count = mask_count(mask, post.rows());
  check(count > 0.0, "kl_regularizer: empty mask");
  Value term_prior = masked_mean(g, latent_kl(detach_dist(g, post), prior), mask, count);
  Value term_post = masked_mean(g, latent_kl(post, detach_dist(g, prior)), mask, count);
  return add(scale(max_with(term_prior, beta), alpha),
             scale(max_with(term_post, beta), 1.0 - alpha));
}

Heads decode_heads(Graph& g, const WorldModel& m, Value z, Value e) {
  check(z.cols() == m.cfg.z_dim && e.cols() == m.cfg.latent.dim(),
        "decode_heads: shape mismatch");
  Value in = concat_cols(z, e);
  Heads h;
  h.reward_symlog = m.reward_head.forward(g, in);
  h.reward_mean = symexp(h.reward_symlog);
  h.info_symlog = m.info_head.forward(g, in);
  h.info_mean = symexp(h.info_symlog);
  h.cont_logit = m.cont_head.forward(g, in);
  h.cont_prob = sigmoid(h.cont_logit);
  return h;
}

namespace {

Tensor symlog_tensor(const Tensor& t) {
  Tensor out = t;
  for (auto& v : out.data) v = symlog_d(v);
  return out;
}

}  // namespace

LossBreakdown elbo_loss(Graph& g, const WorldModel& m, const SequenceBatch& b,
                        const NoiseBundle& noise, EncodeResult* enc_out) {
  EncodeResult enc = encode_sequence(g, m, b, noise);
  if (enc_out) *enc_out = enc;

  double total_valid = 0.0;
  std::vector<double> counts(b.w);
  for (std::size_t k = 0; k < b.w; ++k) {
    counts[k] = mask_count(&b.mask[k], b.n);
    total_valid += counts[k];
  }
  check(total_valid > 0.0, "elbo_loss: batch has no valid positions");

  Value info_ll, reward_ll, cont_ll, kl_reg, kl_raw;
  bool first = true;
  for (std::size_t k = 0; k < b.w; ++k) {
    if (counts[k] == 0.0) continue;
    Value z = enc.stat[k], e = enc.latent[k];
    Value a = g.constant(b.prev_action[k]);
    LatentDist prior = m.dist_from_stats(g, m.prior.forward(g, concat_cols(z, a)));
    Heads heads = decode_heads(g, m, z, e);

    const Tensor& mask = b.mask[k];
    const double wk = counts[k] / total_valid;
    Value i_k = scale(masked_mean(g, gaussian_unit_logprob(heads.info_symlog,
                                                           symlog_tensor(b.info[k])),
                                  &mask, counts[k]), wk);
    Value r_k = scale(masked_mean(g, gaussian_unit_logprob(heads.reward_symlog,
                                                           symlog_tensor(b.prev_reward[k])),
                                  &mask, counts[k]), wk);
    Value c_k = scale(masked_mean(g, bernoulli_logprob(heads.cont_logit, b.cont[k]), &mask,
                                  counts[k]), wk);
    Value mean_kl_k = masked_mean(g, latent_kl(enc.post[k], prior), &mask, counts[k]);
    Value raw_k = scale(mean_kl_k, wk);
    Value reg_k = m.cfg.kl_balancing
                      ? scale(kl_regularizer(g, enc.post[k], prior, m.cfg.kl_balance,
                                             m.cfg.free_bits, &mask), wk)
                      : scale(max_with(mean_kl_k, m.cfg.free_bits), wk);
    if (first) {
      info_ll = i_k;
      reward_ll = r_k;
      cont_ll = c_k;
      kl_reg = reg_k;
      kl_raw = raw_k;
      first = false;
    } else {
      info_ll = add(info_ll, i_k);
      reward_ll = add(reward_ll, r_k);
      cont_ll = add(cont_ll, c_k);
      kl_reg = add(kl_reg, reg_k);
      kl_raw = add(kl_raw, raw_k);
    }
  }

  LossBreakdown out;
  out.info_ll = info_ll.item();
  out.reward_ll = reward_ll.item();
  out.cont_ll = cont_ll.item();
  out.kl_raw = kl_raw.item();
  require_finite(out.info_ll, "information");
  require_finite(out.reward_ll, "reward");
  require_finite(out.cont_ll, "continuation");
  require_finite(out.kl_raw, "KL");
  out.total = add(neg(add(add(info_ll, reward_ll), cont_ll)), kl_reg);
  out.total_value = out.total.item();
  require_finite(out.total_value, "total");
  return out;
}

namespace {

// log-probability of one fixed class combination under factored categorical
// logits, per row -> [n,1]
Value combo_logprob(Graph& g, const CategoricalLatent& d, const std::vector<std::size_t>& combo) {
  const std::size_t n = d.rows(), G = d.groups, C = d.classes;
  Value lsm = log_softmax_rows(reshape(d.logits, {n * G, C}));
  std::vector<std::size_t> idx(n * G);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t grp = 0; grp < G; ++grp) idx[r * G + grp] = combo[grp];
  (void)g;
  return row_sum(reshape(pick_cols(lsm, idx), {n, G}));
}

struct EnumAccum {
  Value info, reward, cont, kl;
  bool init = false;
};

}  // namespace

LossBreakdown elbo_loss_enumerated(Graph& g, const WorldModel& m, const SequenceBatch& b,
                                   std::size_t max_paths) {
  check(m.cfg.latent.kind == LatentKind::kCategorical,
        "elbo_loss_enumerated: requires a categorical latent");
  const std::size_t G = m.cfg.latent.groups, C = m.cfg.latent.classes;
  double paths = 1.0;
  for (std::size_t k = 0; k < b.w; ++k) paths *= std::pow(static_cast<double>(C),
                                                          static_cast<double>(G));
  check(paths <= static_cast<double>(max_paths),
        "elbo_loss_enumerated: path count exceeds the guard");

  std::vector<std::vector<std::size_t>> combos;
  std::vector<std::size_t> cur(G, 0);
  while (true) {
    combos.push_back(cur);
    std::size_t g_i = 0;
    while (g_i < G && ++cur[g_i] == C) cur[g_i++] = 0;
    if (g_i == G) break;
  }
  std::vector<Tensor> onehots;
  for (const auto& combo : combos) {
    Tensor t({b.n, G * C});
    for (std::size_t r = 0; r < b.n; ++r)
      for (std::size_t grp = 0; grp < G; ++grp) t.at(r, grp * C + combo[grp]) = 1.0;
    onehots.push_back(std::move(t));
  }

  double total_valid = 0.0;
  for (std::size_t k = 0; k < b.w; ++k) total_valid += mask_count(&b.mask[k], b.n);
  check(total_valid > 0.0, "elbo_loss_enumerated: batch has no valid positions");

  EnumAccum acc;
  // depth-first expansion over latent paths, weights carried as probabilities
  auto expand = [&](auto&& self, std::size_t k, Value z, Value weight) -> void {
    if (k == b.w) return;
    Value a = g.constant(b.prev_action[k]);
    Value o = g.constant(b.obs[k]);
    LatentDist post = m.dist_from_stats(g, m.encoder.forward(g, concat_cols(concat_cols(z, a), o)));
    LatentDist prior = m.dist_from_stats(g, m.prior.forward(g, concat_cols(z, a)));
    Value mask = g.constant(b.mask[k]);
    const double inv_total = 1.0 / total_valid;
    for (std::size_t j = 0; j < combos.size(); ++j) {
      Value log_q = combo_logprob(g, post.cat, combos[j]);
      Value log_p = combo_logprob(g, prior.cat, combos[j]);
      Value q = exp(log_q);
      Value w_next = mul(weight, q);
      Value e = g.constant(onehots[j]);
      Heads heads = decode_heads(g, m, z, e);
      Value wm_mask = mul(w_next, mask);
      Value i_term = scale(sum_all(mul(wm_mask, gaussian_unit_logprob(
                                                    heads.info_symlog, symlog_tensor(b.info[k])))),
                           inv_total);
      Value r_term = scale(sum_all(mul(wm_mask, gaussian_unit_logprob(
                                                    heads.reward_symlog,
                                                    symlog_tensor(b.prev_reward[k])))),
                           inv_total);
      Value c_term = scale(
          sum_all(mul(wm_mask, bernoulli_logprob(heads.cont_logit, b.cont[k]))), inv_total);
      Value kl_term = scale(sum_all(mul(wm_mask, sub(log_q, log_p))), inv_total);
      if (!acc.init) {
        acc.info = i_term;
        acc.reward = r_term;
        acc.cont = c_term;
        acc.kl = kl_term;
        acc.init = true;
      } else {
        acc.info = add(acc.info, i_term);
        acc.reward = add(acc.reward, r_term);
        acc.cont = add(acc.cont, c_term);
        acc.kl = add(acc.kl, kl_term);
      }
      self(self, k + 1, m.recurrence.step(g, concat_cols(a, e), z), w_next);
    }
  };
  Value z0 = g.constant(Tensor::zeros(b.n, m.cfg.z_dim));
  Value w0 = g.constant(Tensor::full(b.n, 1, 1.0));
  expand(expand, 0, z0, w0);

  LossBreakdown out;
  out.info_ll = acc.info.item();
  out.reward_ll = acc.reward.item();
  out.cont_ll = acc.cont.item();
  out.kl_raw = acc.kl.item();
  require_finite(out.info_ll, "information");
  require_finite(out.reward_ll, "reward");
  require_finite(out.cont_ll, "continuation");
  require_finite(out.kl_raw, "KL");
  // exact objective keeps the unbalanced KL; free bits still floor it
  out.total = add(neg(add(add(acc.info, acc.reward), acc.cont)),
                  max_with(acc.kl, m.cfg.free_bits));
  out.total_value = out.total.item();
  require_finite(out.total_value, "total");
  return out;
}

std::vector<double> sample_latent_plain(const WorldModelConfig& cfg,
                                        const std::vector<double>& raw, std::size_t rows,
                                        Rng& rng) {
  if (cfg.latent.kind == LatentKind::kGaussian) {
    const std::size_t n = cfg.latent.gaussian_dim;
    std::vector<double> out(rows * n);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < n; ++i) {
        const double mean = raw[r * 2 * n + i];
        const double rawsd = raw[r * 2 * n + n + i];
        const double sd = std::log1p(std::exp(-std::abs(rawsd))) + std::max(rawsd, 0.0) + 1e-4;
        out[r * n + i] = mean + sd * rng.normal();
      }
    return out;
  }
  const std::size_t G = cfg.latent.groups, C = cfg.latent.classes;
  std::vector<double> out(rows * G * C, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t grp = 0; grp < G; ++grp) {
      const double* logits = raw.data() + r * G * C + grp * C;
      double mx = logits[0];
      for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, logits[c]);
      double z = 0.0;
      for (std::size_t c = 0; c < C; ++c) z += std::exp(logits[c] - mx);
      double u = rng.uniform();
      std::size_t pick = C - 1;
      double accp = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        accp += std::exp(logits[c] - mx) / z;
        if (u < accp) {
          pick = c;
          break;
        }
      }
      out[r * G * C + grp * C + pick] = 1.0;
    }
  return out;
}

std::vector<double> filter_step(const WorldModel& m, std::vector<double>& z,
                                const std::vector<double>& a_prev,
                                const std::vector<double>& obs, Rng& rng) {
  check(z.size() == m.cfg.z_dim, "filter_step: statistic size mismatch");
  check(a_prev.size() == m.cfg.action_dim && obs.size() == m.cfg.obs_dim,
        "filter_step: input size mismatch");
  std::vector<double> in;
  in.reserve(z.size() + a_prev.size() + obs.size());
  in.insert(in.end(), z.begin(), z.end());
  in.insert(in.end(), a_prev.begin(), a_prev.end());
  in.insert(in.end(), obs.begin(), obs.end());
  std::vector<double> raw = m.encoder.forward_plain(in, 1);
  std::vector<double> e = sample_latent_plain(m.cfg, raw, 1, rng);
  std::vector<double> ae;
  ae.reserve(a_prev.size() + e.size());
  ae.insert(ae.end(), a_prev.begin(), a_prev.end());
  ae.insert(ae.end(), e.begin(), e.end());
  z = m.recurrence.step_plain(ae, z, 1);
  return e;
}

}  // namespace iwm::wm
