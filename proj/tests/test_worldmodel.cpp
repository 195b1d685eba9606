#include <doctest.h>

#include <cmath>

#include "iwm/diff/adam.hpp"
#include "iwm/diff/scalar.hpp"
#include "iwm/wm/worldmodel.hpp"
#include "support/fd_check.hpp"
#include "support/wm_fixtures.hpp"

using namespace iwm;
using namespace iwm::diff;
using namespace iwm::wm;

TEST_CASE("encode_sequence: determinism and boundary") {
  auto cfg = test::tiny_config(LatentKind::kCategorical);
  Rng init(1);
  WorldModel m(cfg, init);
  auto batch = test::random_batch(cfg, 3, 4, 2);
  Rng noise_rng(3);
  auto noise = NoiseBundle::draw(cfg, 3, 4, noise_rng);

  SUBCASE("equal params, batch and noise give bit-identical outputs") {
    Graph g1, g2;
    auto r1 = encode_sequence(g1, m, batch, noise);
    auto r2 = encode_sequence(g2, m, batch, noise);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(r1.stat[k].data() == r2.stat[k].data());
      CHECK(r1.latent[k].data() == r2.latent[k].data());
    }
    CHECK(r1.last_stat.data() == r2.last_stat.data());
  }
  SUBCASE("W=1 gives one pair computed from the zero statistic") {
    auto b1 = test::random_batch(cfg, 3, 1, 2);
    Rng nr(3);
    auto n1 = NoiseBundle::draw(cfg, 3, 1, nr);
    Graph g;
    auto r = encode_sequence(g, m, b1, n1);
    CHECK(r.stat.size() == 1);
    CHECK(r.latent.size() == 1);
    for (double v : r.stat[0].data()) CHECK(v == 0.0);
  }
  SUBCASE("perturbing the last observation leaves earlier pairs unchanged") {
    Graph g1;
    auto r1 = encode_sequence(g1, m, batch, noise);
    auto batch2 = batch;
    for (auto& v : batch2.obs[3].data) v += 0.5;
    Graph g2;
    auto r2 = encode_sequence(g2, m, batch2, noise);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(r1.stat[k].data() == r2.stat[k].data());
      CHECK(r1.latent[k].data() == r2.latent[k].data());
    }
    // the statistic at the last pair predates the perturbed observation
    CHECK(r1.stat[3].data() == r2.stat[3].data());
  }
  SUBCASE("descriptor mismatch is rejected") {
    auto bad = test::random_batch(test::tiny_config(LatentKind::kCategorical, 5), 3, 4, 2);
    Graph g;
    CHECK_THROWS_AS(encode_sequence(g, m, bad, noise), ContractViolation);
  }
}

TEST_CASE("encode_sequence satisfies the recurrence contract bit-exactly") {
  auto cfg = test::tiny_config(LatentKind::kGaussian);
  Rng init(4);
  WorldModel m(cfg, init);
  auto batch = test::random_batch(cfg, 2, 5, 5);
  Rng nr(6);
  auto noise = NoiseBundle::draw(cfg, 2, 5, nr);
  Graph g;
  auto r = encode_sequence(g, m, batch, noise);
  // recompute z_k = u(z_{k-1}, a_{k-1}, e_{k-1}) from the stored pieces
  for (std::size_t k = 1; k < 5; ++k) {
    Graph g2;
    Value z_prev = g2.constant(Tensor(r.stat[k - 1].shape(), r.stat[k - 1].data()));
    Value e_prev = g2.constant(Tensor(r.latent[k - 1].shape(), r.latent[k - 1].data()));
    Value a_prev = g2.constant(batch.prev_action[k - 1]);
    Value z_re = m.recurrence.step(g2, concat_cols(a_prev, e_prev), z_prev);
    CHECK(z_re.data() == r.stat[k].data());
  }
}

TEST_CASE("kl_regularizer") {
  SUBCASE("alpha=0.5, beta=0, post=prior gives zero") {
    Graph g;
    Tensor mean = Tensor::full(2, 3, 0.4), raw = Tensor::full(2, 3, 0.2);
    LatentDist post{LatentKind::kGaussian,
                    {g.input(mean), add_scalar(softplus(g.input(raw)), 1e-4)},
                    {}};
    LatentDist prior{LatentKind::kGaussian,
                     {g.input(mean), add_scalar(softplus(g.input(raw)), 1e-4)},
                     {}};
    CHECK(kl_regularizer(g, post, prior, 0.5, 0.0).item() ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("KL below the floor returns the floored value with zero gradient") {
    Graph g;
    Tensor mp = Tensor::full(1, 2, 0.0), mq = Tensor::full(1, 2, 0.01);
    Tensor sp = Tensor::full(1, 2, 1.0), sq = Tensor::full(1, 2, 1.0);
    LatentDist post{LatentKind::kGaussian, {g.param(mp), g.param(sp)}, {}};
    LatentDist prior{LatentKind::kGaussian, {g.param(mq), g.param(sq)}, {}};
    const double beta = 1.0;  // raw KL here is ~5e-5 << beta
    Value reg = kl_regularizer(g, post, prior, 0.25, beta);
    CHECK(reg.item() == doctest::Approx(beta).epsilon(1e-12));
    g.backward(reg);
    const auto* gm = g.param_grad(mp);
    if (gm)
      for (double v : *gm) CHECK(v == 0.0);
  }
  SUBCASE("alpha=1 routes gradient to the prior only") {
    Graph g;
    Tensor mp = Tensor::full(1, 2, 0.5), mq = Tensor::full(1, 2, -0.5);
    Tensor sp = Tensor::full(1, 2, 1.0), sq = Tensor::full(1, 2, 1.5);
    LatentDist post{LatentKind::kGaussian, {g.param(mp), g.param(sp)}, {}};
    LatentDist prior{LatentKind::kGaussian, {g.param(mq), g.param(sq)}, {}};
    Value reg = kl_regularizer(g, post, prior, 1.0, 0.0);
    g.backward(reg);
    bool prior_has_grad = false;
    for (double v : *g.param_grad(mq)) prior_has_grad |= v != 0.0;
    CHECK(prior_has_grad);
    const auto* gpost = g.param_grad(mp);
    if (gpost)
      for (double v : *gpost) CHECK(v == 0.0);
  }
}

TEST_CASE("elbo_loss: i=o binding equals the uninformed objective bit-exactly") {
  // the uninformed baseline is the same model with the information channel
  // bound to the observation; feeding obs as info must give identical nodes
  auto cfg = test::tiny_config(LatentKind::kCategorical, 3, 3, 2);
  Rng init(11);
  WorldModel m(cfg, init);
  auto batch = test::random_batch(cfg, 4, 3, 12);
  batch.info = batch.obs;  // bind i = o
  auto batch2 = batch;     // "uninformed" assembly produces the same bytes
  Rng nr(13);
  auto noise = NoiseBundle::draw(cfg, 4, 3, nr);
  Graph g1, g2;
  auto l1 = elbo_loss(g1, m, batch, noise);
  auto l2 = elbo_loss(g2, m, batch2, noise);
  CHECK(l1.total_value == l2.total_value);
  CHECK(l1.info_ll == l2.info_ll);
  g1.backward(l1.total);
  g2.backward(l2.total);
  auto params = m.params();
  for (const auto& p : params.items()) {
    const auto* ga = g1.param_grad(*p.tensor);
    const auto* gb = g2.param_grad(*p.tensor);
    REQUIRE(ga != nullptr);
    REQUIRE(gb != nullptr);
    CHECK(*ga == *gb);
  }
}

TEST_CASE("elbo_loss: encoder made equal to the prior zeroes the KL") {
  auto cfg = test::tiny_config(LatentKind::kCategorical);
  Rng init(21);
  WorldModel m(cfg, init);
  // copy prior weights into the encoder's (z, a) rows and zero the o' rows,
  // so q^e(.|z,a,o') == q^p(.|z,a) on every input
  REQUIRE(m.encoder.layers.size() == m.prior.layers.size());
  auto& enc0 = m.encoder.layers[0];
  const auto& pri0 = m.prior.layers[0];
  const std::size_t za = cfg.z_dim + cfg.action_dim, h = enc0.w.cols();
  for (std::size_t r = 0; r < enc0.w.rows(); ++r)
    for (std::size_t c = 0; c < h; ++c)
      enc0.w.at(r, c) = r < za ? pri0.w.at(r, c) : 0.0;
  enc0.b = pri0.b;
  for (std::size_t li = 1; li < m.encoder.layers.size(); ++li) {
    m.encoder.layers[li].w = m.prior.layers[li].w;
    m.encoder.layers[li].b = m.prior.layers[li].b;
  }
  auto batch = test::random_batch(cfg, 3, 4, 22);
  Rng nr(23);
  auto noise = NoiseBundle::draw(cfg, 3, 4, nr);
  Graph g;
  auto loss = elbo_loss(g, m, batch, noise);
  CHECK(loss.kl_raw == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("elbo_loss: KL component invariant under batch permutation") {
  auto cfg = test::tiny_config(LatentKind::kGaussian);
  Rng init(31);
  WorldModel m(cfg, init);
  auto batch = test::random_batch(cfg, 4, 3, 32);
  Rng nr(33);
  auto noise = NoiseBundle::draw(cfg, 4, 3, nr);
  Graph g1;
  auto l1 = elbo_loss(g1, m, batch, noise);

  // permute rows of every tensor (and the noise identically)
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  auto permute = [&](std::vector<Tensor>& ts) {
    for (auto& t : ts) {
      Tensor out = t;
      const std::size_t c = t.cols();
      for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t j = 0; j < c; ++j) out.at(r, j) = t.at(perm[r], j);
      t = out;
    }
  };
  permute(batch.prev_action);
  permute(batch.prev_reward);
  permute(batch.info);
  permute(batch.obs);
  permute(batch.cont);
  permute(batch.mask);
  permute(noise.enc);
  Graph g2;
  auto l2 = elbo_loss(g2, m, batch, noise);
  CHECK(l1.kl_raw == doctest::Approx(l2.kl_raw).epsilon(1e-12));
  CHECK(l1.total_value == doctest::Approx(l2.total_value).epsilon(1e-12));
}

TEST_CASE("elbo_loss gradients match finite differences (Gaussian latent)") {
  auto cfg = test::tiny_config(LatentKind::kGaussian, 2, 2, 2);
  cfg.free_bits = 0.0;
  cfg.kl_balancing = false;  // stop-gradients would decouple value and gradient
  Rng init(41);
  WorldModel m(cfg, init);
  auto batch = test::random_batch(cfg, 2, 2, 42);
  Rng nr(43);
  auto noise = NoiseBundle::draw(cfg, 2, 2, nr);

  auto eval = [&] {
    Graph g;
    return elbo_loss(g, m, batch, noise).total_value;
  };
  auto params = m.params();
  auto grads = [&] {
    Graph g;
    auto loss = elbo_loss(g, m, batch, noise);
    g.backward(loss.total);
    std::vector<std::vector<double>> out;
    for (const auto& p : params.items()) {
      const auto* pg = g.param_grad(*p.tensor);
      out.push_back(pg ? *pg : std::vector<double>(p.tensor->size(), 0.0));
    }
    return out;
  };
  std::vector<Tensor*> tensors;
  for (const auto& p : params.items()) tensors.push_back(p.tensor);
  auto rep = test::fd_check(tensors, eval, grads);
  CHECK_MESSAGE(rep.ok(), rep.where, " rel=", rep.max_rel_err, " abs=", rep.max_abs_err);
}

TEST_CASE("enumerated ELBO equals the expectation of the sampled one") {
  auto cfg = test::tiny_config(LatentKind::kCategorical, 2, 2, 2);
  cfg.latent.groups = 1;
  cfg.latent.classes = 2;
  cfg.free_bits = 0.0;
  Rng init(51);
  WorldModel m(cfg, init);
  auto batch = test::random_batch(cfg, 2, 3, 52);

  Graph ge;
  auto exact = elbo_loss_enumerated(ge, m, batch);

  Rng nr(53);
  double mean = 0.0, m2 = 0.0;
  const int draws = 4000;
  for (int i = 1; i <= draws; ++i) {
    Graph g;
    auto noise = NoiseBundle::draw(cfg, 2, 3, nr);
    const double v = elbo_loss(g, m, batch, noise).total_value;
    const double d = v - mean;
    mean += d / i;
    m2 += d * (v - mean);
  }
  const double sem = std::sqrt(m2 / (draws - 1.0) / draws);
  CHECK(std::abs(mean - exact.total_value) < 4.0 * sem + 1e-9);
}

TEST_CASE("decode_heads") {
  auto cfg = test::tiny_config(LatentKind::kCategorical);
  Rng init(61);
  WorldModel m(cfg, init);
  Rng rng(62);
  Graph g;
  Value z = g.constant(rng.normal_tensor(3, cfg.z_dim));
  Tensor eraw({3, cfg.latent.dim()});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t grp = 0; grp < cfg.latent.groups; ++grp)
      eraw.at(r, grp * cfg.latent.classes + rng.index(cfg.latent.classes)) = 1.0;
  Value e = g.constant(eraw);
  auto heads = decode_heads(g, m, z, e);

  SUBCASE("continuation probability lies in (0,1)") {
    for (double v : heads.cont_prob.data()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
  SUBCASE("log-density at the decoder's own mean beats a grid of candidates") {
    const double mu = heads.reward_symlog.data()[0];
    const double at_mean = 0.0;  // exponent of the density at x = symexp(mu)
    for (double cand = -3.0; cand <= 3.0; cand += 0.25) {
      const double exponent = -0.5 * std::pow(symlog_d(cand) - mu, 2);
      CHECK(at_mean >= exponent);
    }
  }
  SUBCASE("raw-space means are the symexp of the symlog-space outputs") {
    for (std::size_t i = 0; i < heads.reward_mean.data().size(); ++i)
      CHECK(heads.reward_mean.data()[i] ==
            doctest::Approx(symexp_d(heads.reward_symlog.data()[i])).epsilon(1e-12));
  }
  SUBCASE("shape mismatch is rejected") {
    Value bad = g.constant(Tensor::zeros(3, cfg.z_dim + 1));
    CHECK_THROWS_AS(decode_heads(g, m, bad, e), ContractViolation);
  }
}

TEST_CASE("overfitting a constant reward dataset drives the mean to 1") {
  auto cfg = test::tiny_config(LatentKind::kGaussian, 2, 2, 2);
  cfg.z_dim = 8;
  cfg.hidden = 16;
  Rng init(71);
  WorldModel m(cfg, init);
  auto batch = test::random_batch(cfg, 4, 3, 72);
  for (auto& t : batch.prev_reward)
    for (auto& v : t.data) v = 1.0;

  Adam opt(m.params(), {1e-2, 0.9, 0.999, 1e-8, 100.0});
  Rng nr(73);
  for (int step = 0; step < 500; ++step) {
    Graph g;
    auto noise = NoiseBundle::draw(cfg, 4, 3, nr);
    auto loss = elbo_loss(g, m, batch, noise);
    g.backward(loss.total);
    opt.step(g);
  }
  // decode on a fresh encoding of the batch
  Graph g;
  Rng nr2(74);
  auto noise = NoiseBundle::draw(cfg, 4, 3, nr2);
  auto enc = encode_sequence(g, m, batch, noise);
  double mean = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < batch.w; ++k) {
    auto heads = decode_heads(g, m, enc.stat[k], enc.latent[k]);
    for (double v : heads.reward_mean.data()) {
      mean += v;
      ++count;
    }
  }
  mean /= static_cast<double>(count);
  CHECK(std::abs(mean - 1.0) < 0.05);
}
