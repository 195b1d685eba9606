#include "iwm/oracle/elbo_exact.hpp"

#include <cmath>
#include <numbers>

#include "iwm/diff/scalar.hpp"

namespace iwm::oracle {

namespace {

std::vector<double> row_of(const diff::Tensor& t, std::size_t row) {
  const std::size_t c = t.cols();
  return {t.data.begin() + row * c, t.data.begin() + (row + 1) * c};
}

// log softmax probability of one class combination per group
double combo_logprob(const std::vector<double>& logits, std::size_t groups, std::size_t classes,
                     const std::vector<std::size_t>& combo) {
  double total = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const double* l = logits.data() + g * classes;
    double mx = l[0];
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, l[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(l[c] - mx);
    total += l[combo[g]] - mx - std::log(z);
  }
  return total;
}

double unit_gaussian_logpdf(const std::vector<double>& symlog_target,
                            const std::vector<double>& mean) {
  double acc = -0.5 * std::log(2.0 * std::numbers::pi) * static_cast<double>(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double d = symlog_target[i] - mean[i];
    acc -= 0.5 * d * d;
  }
  return acc;
}

double bernoulli_logpdf(double target, double logit) {
  const double sp_pos = std::log1p(std::exp(-std::abs(logit))) + std::max(logit, 0.0);
  const double sp_neg = sp_pos - logit;  // softplus(-x) = softplus(x) - x
  return -(target * sp_neg + (1.0 - target) * sp_pos);
}

double logsumexp(const std::vector<double>& xs) {
  double mx = xs[0];
  for (double x : xs) mx = std::max(mx, x);
  double z = 0.0;
  for (double x : xs) z += std::exp(x - mx);
  return mx + std::log(z);
}

}  // namespace

double exact_log_likelihood(const wm::WorldModel& m, const wm::SequenceBatch& b, std::size_t row,
                            std::size_t max_paths) {
  check(m.cfg.latent.kind == wm::LatentKind::kCategorical,
        "exact_log_likelihood: requires a categorical latent");
  const std::size_t G = m.cfg.latent.groups, C = m.cfg.latent.classes;
  const std::size_t e_dim = G * C, z_dim = m.cfg.z_dim;
  {
    double paths = 1.0;
    for (std::size_t k = 0; k < b.w; ++k)
      paths *= std::pow(static_cast<double>(C), static_cast<double>(G));
    check(paths <= static_cast<double>(max_paths),
          "exact_log_likelihood: path count exceeds the guard");
  }

  std::vector<std::vector<std::size_t>> combos;
  std::vector<std::size_t> cur(G, 0);
  while (true) {
    combos.push_back(cur);
    std::size_t g = 0;
    while (g < G && ++cur[g] == C) cur[g++] = 0;
    if (g == G) break;
  }

  std::vector<double> path_logps;
  std::function<void(std::size_t, const std::vector<double>&, double)> expand =
      [&](std::size_t k, const std::vector<double>& z, double acc) {
        if (k == b.w) {
          path_logps.push_back(acc);
          return;
        }
        const auto a = row_of(b.prev_action[k], row);
        const auto o = row_of(b.obs[k], row);
        std::vector<double> za(z);
        za.insert(za.end(), a.begin(), a.end());
        const std::vector<double> prior_logits = m.prior.forward_plain(za, 1);
        const double mask = b.mask[k].at(row, 0);
        for (const auto& combo : combos) {
          const double logp_e = combo_logprob(prior_logits, G, C, combo);
          std::vector<double> e(e_dim, 0.0);
          for (std::size_t g = 0; g < G; ++g) e[g * C + combo[g]] = 1.0;
          double step_ll = 0.0;
          if (mask != 0.0) {
            std::vector<double> ze(z);
            ze.insert(ze.end(), e.begin(), e.end());
            std::vector<double> info_target = row_of(b.info[k], row);
            for (auto& v : info_target) v = diff::symlog_d(v);
            step_ll += unit_gaussian_logpdf(info_target, m.info_head.forward_plain(ze, 1));
            const double r_sym = diff::symlog_d(b.prev_reward[k].at(row, 0));
            step_ll += unit_gaussian_logpdf({r_sym}, m.reward_head.forward_plain(ze, 1));
            step_ll += bernoulli_logpdf(b.cont[k].at(row, 0), m.cont_head.forward_plain(ze, 1)[0]);
          }
          std::vector<double> ae(a);
          ae.insert(ae.end(), e.begin(), e.end());
          expand(k + 1, m.recurrence.step_plain(ae, z, 1), acc + logp_e + mask * step_ll);
        }
      };
  expand(0, std::vector<double>(z_dim, 0.0), 0.0);
  return logsumexp(path_logps);
}

double exact_log_likelihood_mean(const wm::WorldModel& m, const wm::SequenceBatch& b,
                                 std::size_t max_paths) {
  double total = 0.0;
  for (std::size_t row = 0; row < b.n; ++row) total += exact_log_likelihood(m, b, row, max_paths);
  double valid = 0.0;
  for (std::size_t k = 0; k < b.w; ++k)
    for (std::size_t r = 0; r < b.n; ++r) valid += b.mask[k].at(r, 0);
  check(valid > 0.0, "exact_log_likelihood_mean: no valid positions");
  return total / valid;
}

}  // namespace iwm::oracle
