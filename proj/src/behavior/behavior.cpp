#include "iwm/behavior/behavior.hpp"

#include <algorithm>
#include <cmath>

#include "iwm/diff/dist.hpp"
#include "iwm/diff/scalar.hpp"

namespace iwm::behavior {

using namespace iwm::diff;

Policy::Policy(PolicySpec s, std::size_t z_dim, std::size_t hidden, Rng& rng) : spec(std::move(s)) {
  const std::size_t out = spec.discrete ? spec.n_actions : 2 * spec.bounds.size();
  net = Mlp(z_dim, {hidden}, out, rng);
}

ParamList Policy::params() {
  ParamList out;
  net.collect(out, "pi");
  return out;
}

int Policy::sample_discrete(const std::vector<double>& z, Rng& rng) const {
  check(spec.discrete, "Policy: discrete sample from a box policy");
  std::vector<double> logits = net.forward_plain(z, 1);
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> w(logits.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logits[i] - mx);
  return static_cast<int>(rng.categorical(w));
}

std::vector<double> Policy::sample_box(const std::vector<double>& z, Rng& rng) const {
  check(!spec.discrete, "Policy: box sample from a discrete policy");
  const std::size_t n = spec.bounds.size();
  std::vector<double> stats = net.forward_plain(z, 1);
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = stats[i];
    const double sd = std::log1p(std::exp(-std::abs(stats[n + i]))) +
                      std::max(stats[n + i], 0.0) + 1e-4;
    const double squashed = std::tanh(mean + sd * rng.normal());
    const auto [lo, hi] = spec.bounds[i];
    a[i] = lo + (hi - lo) * 0.5 * (squashed + 1.0);
  }
  return a;
}

Critic::Critic(std::size_t z_dim, std::size_t hidden, Rng& rng) {
  net = Mlp(z_dim, {hidden}, 1, rng);
}

ParamList Critic::params() {
  ParamList out;
  net.collect(out, "vf");
  return out;
}

double Critic::value_raw(const std::vector<double>& z) const {
  return symexp_d(net.forward_plain(z, 1)[0]);
}

ImaginationView imagination_view(const wm::WorldModel& m) {
  return {&m.recurrence, &m.prior, &m.reward_head, &m.cont_head, &m.cfg};
}

ImaginationStarts starts_from_encode(const wm::EncodeResult& enc, const wm::SequenceBatch& batch) {
  ImaginationStarts out;
  out.z_dim = enc.stat.at(0).cols();
  out.e_dim = enc.latent.at(0).cols();
  out.a_dim = batch.prev_action.at(0).cols();
  for (std::size_t k = 0; k < batch.w; ++k) {
    const auto& zd = enc.stat[k].data();
    const auto& ed = enc.latent[k].data();
    for (std::size_t r = 0; r < batch.n; ++r) {
      if (batch.mask[k].at(r, 0) == 0.0) continue;  // padded position, not a real pair
      out.z.insert(out.z.end(), zd.begin() + r * out.z_dim, zd.begin() + (r + 1) * out.z_dim);
      out.e.insert(out.e.end(), ed.begin() + r * out.e_dim, ed.begin() + (r + 1) * out.e_dim);
      const auto& ad = batch.prev_action[k].data;
      out.a.insert(out.a.end(), ad.begin() + r * out.a_dim, ad.begin() + (r + 1) * out.a_dim);
      ++out.count;
    }
  }
  return out;
}

namespace {

std::vector<double> concat_rows(const std::vector<double>& a, std::size_t ad,
                                const std::vector<double>& b, std::size_t bd,
                                std::size_t rows) {
  std::vector<double> out(rows * (ad + bd));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(a.begin() + r * ad, a.begin() + (r + 1) * ad, out.begin() + r * (ad + bd));
    std::copy(b.begin() + r * bd, b.begin() + (r + 1) * bd, out.begin() + r * (ad + bd) + ad);
  }
  return out;
}

}  // namespace

ImaginedTrajectory imagine(const ImaginationView& view, const Policy& policy,
                           const Critic& critic, const ImaginationStarts& starts, std::size_t K,
                           Rng& rng) {
  check(K >= 1, "imagine: horizon must be >= 1");
  check(starts.count >= 1, "imagine: no start pairs");
  const std::size_t n = starts.count;
  const std::size_t zd = starts.z_dim, ed = starts.e_dim, ad = starts.a_dim;

  ImaginedTrajectory traj;
  traj.count = n;
  traj.horizon = K;
  traj.z.resize(K);
  traj.e.resize(K);
  traj.action_index.resize(K);
  traj.action.resize(K);
  traj.reward.resize(K);
  traj.cont.resize(K);
  traj.value.resize(K);

  // c_0 comes from the start pair, the only prediction that looks at real data
  {
    std::vector<double> ze = concat_rows(starts.z, zd, starts.e, ed, n);
    std::vector<double> logits = view.cont_head->forward_plain(ze, n);
    traj.cont[0].resize(n);
    for (std::size_t r = 0; r < n; ++r) traj.cont[0][r] = 1.0 / (1.0 + std::exp(-logits[r]));
  }

  std::vector<double> z_prev = starts.z, e_prev = starts.e, a_prev = starts.a;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> ae = concat_rows(a_prev, ad, e_prev, ed, n);
    std::vector<double> z = view.recurrence->step_plain(ae, z_prev, n);

    // a_k ~ g(.|z_k), one row at a time to keep the rng stream well defined
    std::vector<double> a(n * ad, 0.0);
    traj.action_index[k].resize(n, -1);
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<double> zr(z.begin() + r * zd, z.begin() + (r + 1) * zd);
      if (policy.spec.discrete) {
        const int idx = policy.sample_discrete(zr, rng);
        traj.action_index[k][r] = idx;
        a[r * ad + static_cast<std::size_t>(idx)] = 1.0;
      } else {
        std::vector<double> ar = policy.sample_box(zr, rng);
        std::copy(ar.begin(), ar.end(), a.begin() + r * ad);
      }
    }

    std::vector<double> za = concat_rows(z, zd, a, ad, n);
    std::vector<double> prior_raw = view.prior->forward_plain(za, n);
    std::vector<double> e = wm::sample_latent_plain(*view.cfg, prior_raw, n, rng);

    std::vector<double> ze = concat_rows(z, zd, e, ed, n);
    std::vector<double> r_sym = view.reward_head->forward_plain(ze, n);
    std::vector<double> c_logit = view.cont_head->forward_plain(ze, n);
    traj.reward[k].resize(n);
    traj.value[k].resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      traj.reward[k][r] = symexp_d(r_sym[r]);
      std::vector<double> zr(z.begin() + r * zd, z.begin() + (r + 1) * zd);
      traj.value[k][r] = critic.value_raw(zr);
    }
    if (k + 1 < K) {
      traj.cont[k + 1].resize(n);
      for (std::size_t r = 0; r < n; ++r)
        traj.cont[k + 1][r] = 1.0 / (1.0 + std::exp(-c_logit[r]));
    }

    traj.z[k] = z;
    traj.e[k] = e;
    traj.action[k] = a;
    z_prev = std::move(z);
    e_prev = std::move(e);
    a_prev = std::move(a);
  }
  return traj;
}

std::vector<double> lambda_returns(const std::vector<double>& rewards,
                                   const std::vector<double>& continuations,
                                   const std::vector<double>& values, double gamma,
                                   double lambda) {
  check(gamma >= 0.0 && gamma < 1.0, "lambda_returns: gamma must be in [0,1)");
  check(lambda >= 0.0 && lambda <= 1.0, "lambda_returns: lambda must be in [0,1]");
  check(!values.empty(), "lambda_returns: empty values");
  check(rewards.size() + 1 == values.size() && continuations.size() == rewards.size(),
        "lambda_returns: length mismatch");
  const std::size_t K = values.size();
  std::vector<double> G(K);
  G[K - 1] = values[K - 1];
  for (std::size_t k = K - 1; k-- > 0;)
    G[k] = rewards[k] + gamma * continuations[k] * ((1.0 - lambda) * values[k + 1] +
                                                    lambda * G[k + 1]);
  return G;
}

std::vector<Value> lambda_returns_taped(const std::vector<Value>& rewards,
                                        const std::vector<Value>& continuations,
                                        const std::vector<Value>& values, double gamma,
                                        double lambda) {
  check(!values.empty() && rewards.size() + 1 == values.size() &&
            continuations.size() == rewards.size(),
        "lambda_returns_taped: length mismatch");
  const std::size_t K = values.size();
  std::vector<Value> G(K);
  G[K - 1] = values[K - 1];
  for (std::size_t k = K - 1; k-- > 0;) {
    Value boot = add(scale(values[k + 1], 1.0 - lambda), scale(G[k + 1], lambda));
    G[k] = add(rewards[k], scale(mul(continuations[k], boot), gamma));
  }
  return G;
}

std::vector<std::vector<double>> value_targets(const ImaginedTrajectory& traj, double gamma,
                                               double lambda) {
  const std::size_t K = traj.horizon, n = traj.count;
  std::vector<std::vector<double>> targets(K, std::vector<double>(n));
  std::vector<double> r(K - 1), c(K - 1), v(K);
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t k = 0; k < K; ++k) v[k] = traj.value[k][col];
    for (std::size_t k = 0; k + 1 < K; ++k) {
      r[k] = traj.reward[k][col];
      c[k] = traj.cont[k][col];
    }
    auto G = lambda_returns(r, c, v, gamma, lambda);
    for (std::size_t k = 0; k < K; ++k) targets[k][col] = G[k];
  }
  return targets;
}

void ReturnNormalizer::update(std::vector<double> returns) {
  if (returns.empty()) return;
  std::sort(returns.begin(), returns.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(returns.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, returns.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return returns[lo] * (1.0 - frac) + returns[hi] * frac;
  };
  const double p5 = quantile(0.05), p95 = quantile(0.95);
  if (!initialized_) {
    p5_ = p5;
    p95_ = p95;
    initialized_ = true;
  } else {
    p5_ = decay_ * p5_ + (1.0 - decay_) * p5;
    p95_ = decay_ * p95_ + (1.0 - decay_) * p95;
  }
}

double ReturnNormalizer::scale() const { return std::max(1.0, p95_ - p5_); }

PolicyUpdateStats policy_update(Policy& policy, Adam& opt, const ImaginedTrajectory& traj,
                                const std::vector<std::vector<double>>& targets,
                                ReturnNormalizer& normalizer, double entropy_weight) {
  check(policy.spec.discrete, "policy_update: REINFORCE path expects a discrete policy");
  const std::size_t K = traj.horizon, n = traj.count;
  check(targets.size() == K, "policy_update: targets not aligned with the trajectory");

  std::vector<double> flat;
  flat.reserve(K * n);
  for (const auto& row : targets) flat.insert(flat.end(), row.begin(), row.end());
  normalizer.update(flat);
  const double scale_div = normalizer.scale();

  const std::size_t zd = traj.z[0].size() / n;
  Tensor zmat({K * n, zd});
  Tensor adv({K * n, 1});
  std::vector<std::size_t> idx(K * n);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t r = 0; r < n; ++r) {
      std::copy(traj.z[k].begin() + r * zd, traj.z[k].begin() + (r + 1) * zd,
                zmat.data.begin() + (k * n + r) * zd);
      adv.data[k * n + r] = (targets[k][r] - traj.value[k][r]) / scale_div;
      idx[k * n + r] = static_cast<std::size_t>(traj.action_index[k][r]);
    }

  Graph g;
  Value logits = policy.net.forward(g, g.constant(zmat));
  Value logp = pick_cols(log_softmax_rows(logits), idx);
  Value objective = mean_all(mul(logp, g.constant(adv)));
  Value entropy = mean_all(entropy_categorical(logits));
  Value loss = neg(add(objective, scale(entropy, entropy_weight)));
  if (!std::isfinite(loss.item()))
    throw NonFiniteError("policy_update: non-finite objective");
  g.backward(loss);
  opt.step(g);
  return {objective.item(), entropy.item()};
}

PolicyUpdateStats policy_update_pathwise(Policy& policy, Adam& opt, const ImaginationView& view,
                                         const Critic& critic, const ImaginationStarts& starts,
                                         std::size_t K, double gamma, double lambda,
                                         double entropy_weight, Rng& rng) {
  check(!policy.spec.discrete, "policy_update_pathwise: expects a box policy");
  check(K >= 1 && starts.count >= 1, "policy_update_pathwise: bad inputs");
  const std::size_t n = starts.count;
  const std::size_t zd = starts.z_dim, ed = starts.e_dim, ad = starts.a_dim;

  Graph g;
  auto frozen = [&g](const Mlp& net, Value x) {
    Graph::FrozenScope freeze(g);
    return net.forward(g, x);
  };
  auto frozen_gru = [&g](const GruCell& cell, Value x, Value h) {
    Graph::FrozenScope freeze(g);
    return cell.step(g, x, h);
  };

  Value z_prev = g.constant(Tensor({n, zd}, starts.z));
  Value e_prev = g.constant(Tensor({n, ed}, starts.e));
  Value a_prev = g.constant(Tensor({n, ad}, starts.a));
  Value c0;
  {
    Value logit = frozen(*view.cont_head, concat_cols(z_prev, e_prev));
    c0 = sigmoid(logit);
  }

  std::vector<Value> rewards, conts{c0}, values;
  Value entropy_sum;
  for (std::size_t k = 0; k < K; ++k) {
    Value z = frozen_gru(*view.recurrence, concat_cols(a_prev, e_prev), z_prev);
    // live policy: reparameterized squashed-Gaussian actions
    Value stats = policy.net.forward(g, z);
    Value mean = slice_cols(stats, 0, ad);
    Value sd = add_scalar(softplus(slice_cols(stats, ad, 2 * ad)), 1e-4);
    Value raw = add(mean, mul(sd, g.constant(rng.normal_tensor(n, ad))));
    Value unit = tanh(raw);  // in (-1, 1)
    Tensor lo({1, ad}), span({1, ad});
    for (std::size_t i = 0; i < ad; ++i) {
      lo.data[i] = policy.spec.bounds[i].first;
      span.data[i] = policy.spec.bounds[i].second - policy.spec.bounds[i].first;
    }
    Value a = add_rowvec(mul(scale(add_scalar(unit, 1.0), 0.5),
                             g.constant(Tensor({n, ad}, [&] {
                               std::vector<double> s(n * ad);
                               for (std::size_t r = 0; r < n; ++r)
                                 for (std::size_t i = 0; i < ad; ++i) s[r * ad + i] = span.data[i];
                               return s;
                             }()))),
                        g.constant(lo));
    Value ent_k = row_sum(log(sd));  // Gaussian entropy up to a constant
    entropy_sum = k == 0 ? sum_all(ent_k) : add(entropy_sum, sum_all(ent_k));

    Value prior_raw = frozen(*view.prior, concat_cols(z, a));
    wm::LatentDist prior_dist;
    prior_dist.kind = view.cfg->latent.kind;
    Value e;
    if (view.cfg->latent.kind == wm::LatentKind::kGaussian) {
      const std::size_t gd = view.cfg->latent.gaussian_dim;
      DiagGaussian d{slice_cols(prior_raw, 0, gd),
                     add_scalar(softplus(slice_cols(prior_raw, gd, 2 * gd)), 1e-4)};
      e = reparam_sample(d, rng.normal_tensor(n, gd));
    } else {
      CategoricalLatent d{prior_raw, view.cfg->latent.groups, view.cfg->latent.classes};
      e = reparam_sample(d, rng.uniform_tensor(n, view.cfg->latent.groups));
    }

    Value ze = concat_cols(z, e);
    rewards.push_back(symexp(frozen(*view.reward_head, ze)));
    if (k + 1 < K) conts.push_back(sigmoid(frozen(*view.cont_head, ze)));
    {
      Graph::FrozenScope freeze(g);
      values.push_back(symexp(critic.net.forward(g, z)));
    }

    z_prev = z;
    e_prev = e;
    a_prev = a;
  }

  rewards.pop_back();  // recursion consumes K-1 rewards and continuations
  conts.pop_back();
  auto G = lambda_returns_taped(rewards, conts, values, gamma, lambda);
  Value total;
  for (std::size_t k = 0; k < G.size(); ++k)
    total = k == 0 ? sum_all(G[k]) : add(total, sum_all(G[k]));
  const double inv = 1.0 / static_cast<double>(K * n);
  Value objective = scale(total, inv);
  Value loss = neg(add(objective, scale(entropy_sum, entropy_weight * inv)));
  if (!std::isfinite(loss.item()))
    throw NonFiniteError("policy_update_pathwise: non-finite objective");
  g.backward(loss);
  opt.step(g);
  return {objective.item(), scale(entropy_sum, inv).item()};
}

double critic_update(Critic& critic, Adam& opt, const ImaginedTrajectory& traj,
                     const std::vector<std::vector<double>>& targets) {
  const std::size_t K = traj.horizon, n = traj.count;
  check(targets.size() == K, "critic_update: targets not aligned with the trajectory");
  const std::size_t zd = traj.z[0].size() / n;
  Tensor zmat({K * n, zd});
  Tensor tgt({K * n, 1});
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t r = 0; r < n; ++r) {
      std::copy(traj.z[k].begin() + r * zd, traj.z[k].begin() + (r + 1) * zd,
                zmat.data.begin() + (k * n + r) * zd);
      tgt.data[k * n + r] = symlog_d(targets[k][r]);
    }
  Graph g;
  Value out = critic.net.forward(g, g.constant(zmat));
  Value loss = mean_all(square(sub(out, g.constant(tgt))));
  if (!std::isfinite(loss.item())) throw NonFiniteError("critic_update: non-finite loss");
  g.backward(loss);
  opt.step(g);
  return loss.item();
}

}  // namespace iwm::behavior
