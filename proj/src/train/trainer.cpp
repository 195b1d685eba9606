#include "iwm/train/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <deque>
#include <fstream>

#include "iwm/diff/checkpoint.hpp"
#include "iwm/envs/registry.hpp"

namespace iwm::train {

using namespace iwm::diff;

void TrainConfig::validate() const {
  check(env_steps >= 1, "TrainConfig: env_steps must be >= 1");
  check(before_training <= static_cast<std::int64_t>(capacity),
        "TrainConfig: steps-before-training exceeds the replay capacity");
  check(window >= 2, "TrainConfig: window must be >= 2");
  check(horizon >= 1, "TrainConfig: horizon must be >= 1");
  check(batch_size >= 1, "TrainConfig: batch size must be >= 1");
  check(gamma < 1.0, "TrainConfig: gamma must be < 1");
  check(lambda >= 0.0 && lambda <= 1.0, "TrainConfig: lambda must be in [0,1]");
  check(window_stride >= 1, "TrainConfig: window stride must be >= 1");
  check(!env_name.empty(), "TrainConfig: environment name is empty");
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j;
  j["train.env_steps"] = env_steps;
  j["train.before_training"] = before_training;
  j["train.train_ratio"] = train_ratio;
  j["train.window"] = window;
  j["train.horizon"] = horizon;
  j["train.batch_size"] = batch_size;
  j["train.capacity"] = capacity;
  j["train.gamma"] = gamma;
  j["train.lambda"] = lambda;
  j["train.seed"] = seed;
  j["train.informed"] = informed;
  j["train.model_lr"] = model_lr;
  j["train.policy_lr"] = policy_lr;
  j["train.critic_lr"] = critic_lr;
  j["train.clip_norm"] = clip_norm;
  j["train.entropy_weight"] = entropy_weight;
  j["train.window_stride"] = window_stride;
  j["train.eval_interval"] = eval_interval;
  j["train.eval_episodes"] = eval_episodes;
  j["train.success_return"] = success_return;
  j["train.eval_episode_cap"] = eval_episode_cap;
  j["train.checkpoint_interval"] = checkpoint_interval;
  j["train.log_interval"] = log_interval;
  j["train.episode_cap"] = episode_cap;
  j["train.wall_clock"] = wall_clock;
  j["env.name"] = env_name;
  j["model.z_dim"] = model.z_dim;
  j["model.hidden"] = model.hidden;
  j["model.latent"] = model.latent.kind == wm::LatentKind::kCategorical ? "categorical" : "gaussian";
  j["model.groups"] = model.latent.groups;
  j["model.classes"] = model.latent.classes;
  j["model.gaussian_dim"] = model.latent.gaussian_dim;
  j["model.kl_balance"] = model.kl_balance;
  j["model.free_bits"] = model.free_bits;
  j["model.kl_balancing"] = model.kl_balancing;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "train.env_steps") c.env_steps = value.get<std::int64_t>();
    else if (key == "train.before_training") c.before_training = value.get<std::int64_t>();
    else if (key == "train.train_ratio") c.train_ratio = value.get<double>();
    else if (key == "train.window") c.window = value.get<std::size_t>();
    else if (key == "train.horizon") c.horizon = value.get<std::size_t>();
    else if (key == "train.batch_size") c.batch_size = value.get<std::size_t>();
    else if (key == "train.capacity") c.capacity = value.get<std::size_t>();
    else if (key == "train.gamma") c.gamma = value.get<double>();
    else if (key == "train.lambda") c.lambda = value.get<double>();
    else if (key == "train.seed") c.seed = value.get<std::uint64_t>();
    else if (key == "train.informed") c.informed = value.get<bool>();
    else if (key == "train.model_lr") c.model_lr = value.get<double>();
    else if (key == "train.policy_lr") c.policy_lr = value.get<double>();
    else if (key == "train.critic_lr") c.critic_lr = value.get<double>();
    else if (key == "train.clip_norm") c.clip_norm = value.get<double>();
    else if (key == "train.entropy_weight") c.entropy_weight = value.get<double>();
    else if (key == "train.window_stride") c.window_stride = value.get<std::size_t>();
    else if (key == "train.eval_interval") c.eval_interval = value.get<std::int64_t>();
    else if (key == "train.eval_episodes") c.eval_episodes = value.get<std::size_t>();
    else if (key == "train.success_return") c.success_return = value.get<double>();
    else if (key == "train.eval_episode_cap") c.eval_episode_cap = value.get<std::size_t>();
    else if (key == "train.checkpoint_interval") c.checkpoint_interval = value.get<std::int64_t>();
    else if (key == "train.log_interval") c.log_interval = value.get<std::int64_t>();
    else if (key == "train.episode_cap") c.episode_cap = value.get<std::size_t>();
    else if (key == "train.wall_clock") c.wall_clock = value.get<bool>();
    else if (key == "env.name") c.env_name = value.get<std::string>();
    else if (key == "model.z_dim") c.model.z_dim = value.get<std::size_t>();
    else if (key == "model.hidden") c.model.hidden = value.get<std::size_t>();
    else if (key == "model.latent") {
      const std::string kind = value.get<std::string>();
      check(kind == "categorical" || kind == "gaussian",
            "config: model.latent must be categorical or gaussian");
      c.model.latent.kind =
          kind == "categorical" ? wm::LatentKind::kCategorical : wm::LatentKind::kGaussian;
    } else if (key == "model.groups") c.model.latent.groups = value.get<std::size_t>();
    else if (key == "model.classes") c.model.latent.classes = value.get<std::size_t>();
    else if (key == "model.gaussian_dim") c.model.latent.gaussian_dim = value.get<std::size_t>();
    else if (key == "model.kl_balance") c.model.kl_balance = value.get<double>();
    else if (key == "model.free_bits") c.model.free_bits = value.get<double>();
    else if (key == "model.kl_balancing") c.model.kl_balancing = value.get<bool>();
    else
      throw ContractViolation("config: unknown key '" + key + "'");
  }
  return c;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct StepTuple {
  std::vector<double> prev_action;
  double prev_reward = 0.0;
  std::vector<double> info;
  std::vector<double> obs;
  double cont = 1.0;
};

Window window_from_history(const std::deque<StepTuple>& history, std::size_t w,
                           std::size_t a_dim, std::size_t i_dim, std::size_t o_dim) {
  Window out;
  out.prev_action.assign(w * a_dim, 0.0);
  out.prev_reward.assign(w, 0.0);
  out.info.assign(w * i_dim, 0.0);
  out.obs.assign(w * o_dim, 0.0);
  out.cont.assign(w, 1.0);
  out.mask.assign(w, 0.0);
  const std::size_t have = std::min(history.size(), w);
  const std::size_t pad = w - have;
  for (std::size_t k = 0; k < have; ++k) {
    const StepTuple& t = history[history.size() - have + k];
    const std::size_t pos = pad + k;
    std::copy(t.prev_action.begin(), t.prev_action.end(),
              out.prev_action.begin() + pos * a_dim);
    out.prev_reward[pos] = t.prev_reward;
    std::copy(t.info.begin(), t.info.end(), out.info.begin() + pos * i_dim);
    std::copy(t.obs.begin(), t.obs.end(), out.obs.begin() + pos * o_dim);
    out.cont[pos] = t.cont;
    out.mask[pos] = 1.0;
  }
  return out;
}

wm::SequenceBatch assemble_batch(const ReplayBuffer& buffer, std::size_t n, std::size_t w,
                                 std::size_t a_dim, std::size_t i_dim, std::size_t o_dim,
                                 bool informed, Rng& rng) {
  std::vector<const Window*> picked;
  picked.reserve(n);
  for (std::size_t i = 0; i < n; ++i) picked.push_back(&buffer.sample(rng));

  wm::SequenceBatch b;
  b.n = n;
  b.w = w;
  const std::size_t eff_i = informed ? i_dim : o_dim;
  for (std::size_t k = 0; k < w; ++k) {
    Tensor a({n, a_dim}), r({n, 1}), inf({n, eff_i}), o({n, o_dim}), c({n, 1}), m({n, 1});
    for (std::size_t row = 0; row < n; ++row) {
      const Window& win = *picked[row];
      std::copy(win.prev_action.begin() + k * a_dim, win.prev_action.begin() + (k + 1) * a_dim,
                a.data.begin() + row * a_dim);
      r.at(row, 0) = win.prev_reward[k];
      const auto& src = informed ? win.info : win.obs;
      const std::size_t src_dim = informed ? i_dim : o_dim;
      std::copy(src.begin() + k * src_dim, src.begin() + (k + 1) * src_dim,
                inf.data.begin() + row * eff_i);
      std::copy(win.obs.begin() + k * o_dim, win.obs.begin() + (k + 1) * o_dim,
                o.data.begin() + row * o_dim);
      c.at(row, 0) = win.cont[k];
      m.at(row, 0) = win.mask[k];
    }
    b.prev_action.push_back(std::move(a));
    b.prev_reward.push_back(std::move(r));
    b.info.push_back(std::move(inf));
    b.obs.push_back(std::move(o));
    b.cont.push_back(std::move(c));
    b.mask.push_back(std::move(m));
  }
  b.null_first_action();
  return b;
}

}  // namespace

RunResult run(const TrainConfig& cfg_in, const std::filesystem::path& out_dir) {
  TrainConfig cfg = cfg_in;
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  check(!std::filesystem::exists(out_dir / "manifest.json"),
        "run: output directory already holds a run (manifest.json exists)");

  auto env = envs::make_env(cfg.env_name);
  const envs::EnvDescriptor desc = env->descriptor();
  check(desc.actions.discrete, "run: registered environments use finite action spaces");
  if (cfg.gamma < 0.0) cfg.gamma = desc.discount;
  check(cfg.gamma >= 0.0 && cfg.gamma < 1.0, "run: gamma must land in [0,1)");

  cfg.model.obs_dim = desc.obs_dim;
  cfg.model.info_dim = cfg.informed ? desc.info_dim : desc.obs_dim;
  cfg.model.action_dim = desc.actions.dim();

  Rng init_rng(Rng::substream(cfg.seed, 0));
  Rng act_rng(Rng::substream(cfg.seed, 1));
  Rng episode_rng(Rng::substream(cfg.seed, 2));
  Rng replay_rng(Rng::substream(cfg.seed, 3));
  Rng learn_rng(Rng::substream(cfg.seed, 4));

  wm::WorldModel model(cfg.model, init_rng);
  behavior::Policy policy({true, desc.actions.n, {}}, cfg.model.z_dim, cfg.model.hidden, init_rng);
  behavior::Critic critic(cfg.model.z_dim, cfg.model.hidden, init_rng);

  Adam model_opt(model.params(), {cfg.model_lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
  Adam policy_opt(policy.params(), {cfg.policy_lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
  Adam critic_opt(critic.params(), {cfg.critic_lr, 0.9, 0.999, 1e-8, cfg.clip_norm});
  behavior::ReturnNormalizer normalizer;

  ReplayBuffer buffer(cfg.capacity);

  // run manifest first, so aborted runs keep their provenance
  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["code_hash"] = [&] {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(kVersion)));
    return std::string(buf);
  }();
  manifest["config"] = cfg.to_json();
  manifest["env"] = {{"obs_dim", desc.obs_dim},
                     {"info_dim", desc.info_dim},
                     {"actions", desc.actions.n},
                     {"discount", desc.discount},
                     {"informed_binding", cfg.informed ? "information" : "observation"}};
  auto write_manifest = [&] {
    std::ofstream f(out_dir / "manifest.json");
    f << manifest.dump(2) << "\n";
  };
  write_manifest();

  std::ofstream metrics(out_dir / "metrics.csv");
  metrics << "env_step,grad_step,episode,return,length,loss_total,loss_info,loss_reward,"
             "loss_cont,loss_kl,wall_s\n";
  std::ofstream evalcsv(out_dir / "eval.csv");
  evalcsv << "env_step,episodes,mean_return,min_return,max_return,stddev,success_rate\n";

  auto save_ckpt = [&](const std::string& name) {
    ParamList all;
    all.append(model.params());
    all.append(policy.params());
    all.append(critic.params());
    nlohmann::json sidecar;
    sidecar["config"] = cfg.to_json();
    sidecar["env"] = manifest["env"];
    save_checkpoint(out_dir / name, all, sidecar);
  };

  const auto t0 = std::chrono::steady_clock::now();
  auto wall_seconds = [&] {
    if (!cfg.wall_clock) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  RunResult result;
  result.run_dir = out_dir;
  wm::LossBreakdown last_loss;
  std::int64_t grad_steps = 0;
  std::size_t episode_idx = 0;
  double episode_return = 0.0, last_episode_return = 0.0;
  std::size_t episode_len = 0, last_episode_len = 0;

  const std::size_t a_dim = cfg.model.action_dim;
  const std::size_t i_dim = desc.info_dim, o_dim = desc.obs_dim;

  std::deque<StepTuple> history;
  std::vector<double> z(cfg.model.z_dim, 0.0);
  std::vector<double> a_prev(a_dim, 0.0);

  auto begin_episode = [&] {
    auto [info0, obs0] = env->reset(episode_rng.next_u64());
    history.clear();
    history.push_back({std::vector<double>(a_dim, 0.0), 0.0, std::move(info0), std::move(obs0),
                       1.0});
    std::fill(z.begin(), z.end(), 0.0);
    std::fill(a_prev.begin(), a_prev.end(), 0.0);
    episode_return = 0.0;
    episode_len = 0;
  };

  auto write_row = [&](std::int64_t env_step) {
    metrics << env_step << ',' << grad_steps << ',' << episode_idx << ','
            << fmt(last_episode_return) << ',' << last_episode_len << ','
            << fmt(last_loss.total_value) << ',' << fmt(last_loss.info_ll) << ','
            << fmt(last_loss.reward_ll) << ',' << fmt(last_loss.cont_ll) << ','
            << fmt(last_loss.kl_raw) << ',' << fmt(wall_seconds()) << '\n';
    metrics.flush();
  };

  begin_episode();
  try {
    for (std::int64_t s = 0; s < cfg.env_steps; ++s) {
      // --- environment interaction (Fig. 4 execution policy) ---
      wm::filter_step(model, z, a_prev, history.back().obs, act_rng);
      const int action = policy.sample_discrete(z, act_rng);
      envs::InformedStep step = env->step(action);

      std::vector<double> a_enc(a_dim, 0.0);
      a_enc[static_cast<std::size_t>(action)] = 1.0;
      episode_return += step.reward;
      ++episode_len;
      history.push_back({a_enc, step.reward, std::move(step.information),
                         std::move(step.observation), step.continuation ? 1.0 : 0.0});
      if ((s + 1) % static_cast<std::int64_t>(cfg.window_stride) == 0)
        buffer.add(window_from_history(history, cfg.window, a_dim, i_dim, o_dim));

      const bool truncated = env->episode_over() ||
                             (cfg.episode_cap > 0 && episode_len >= cfg.episode_cap);
      if (!step.continuation || truncated) {
        last_episode_return = episode_return;
        last_episode_len = episode_len;
        ++episode_idx;
        write_row(s + 1);
        begin_episode();
      } else {
        a_prev = std::move(a_enc);
      }

      // --- learning, gated by |B| >= F and g < R s ---
      while (buffer.size() >= static_cast<std::size_t>(cfg.before_training) &&
             static_cast<double>(grad_steps) < cfg.train_ratio * static_cast<double>(s)) {
        auto batch = assemble_batch(buffer, cfg.batch_size, cfg.window, a_dim, i_dim, o_dim,
                                    cfg.informed, replay_rng);
        Graph g;
        auto noise = wm::NoiseBundle::draw(cfg.model, cfg.batch_size, cfg.window, learn_rng);
        wm::EncodeResult enc;
        last_loss = wm::elbo_loss(g, model, batch, noise, &enc);
        g.backward(last_loss.total);
        model_opt.step(g);

        // imagination starts from the pairs that fed the loss; the rollout
        // itself runs under the just-updated parameters
        auto starts = behavior::starts_from_encode(enc, batch);
        auto view = behavior::imagination_view(model);
        auto traj = behavior::imagine(view, policy, critic, starts, cfg.horizon, learn_rng);
        auto targets = behavior::value_targets(traj, cfg.gamma, cfg.lambda);
        behavior::policy_update(policy, policy_opt, traj, targets, normalizer,
                                cfg.entropy_weight);
        behavior::critic_update(critic, critic_opt, traj, targets);
        ++grad_steps;
      }

      if (cfg.log_interval > 0 && (s + 1) % cfg.log_interval == 0) write_row(s + 1);
      if (cfg.eval_interval > 0 && (s + 1) % cfg.eval_interval == 0) {
        auto eval_env = envs::make_env(cfg.env_name);
        EvalStats stats = evaluate(model, policy, *eval_env, cfg.eval_episodes,
                                   Rng::substream(cfg.seed, 500 + static_cast<std::uint64_t>(s)),
                                   cfg.success_return, cfg.eval_episode_cap);
        evalcsv << (s + 1) << ',' << stats.episodes << ',' << fmt(stats.mean) << ','
                << fmt(stats.min) << ',' << fmt(stats.max) << ',' << fmt(stats.stddev) << ','
                << fmt(stats.success_rate) << '\n';
        evalcsv.flush();
        result.eval_curve.push_back({s + 1, stats});
      }
      if (cfg.checkpoint_interval > 0 && (s + 1) % cfg.checkpoint_interval == 0)
        save_ckpt("ckpt_step" + std::to_string(s + 1));
    }
  } catch (const NonFiniteError& err) {
    manifest["aborted"] = err.what();
    manifest["grad_steps"] = grad_steps;
    write_manifest();
    throw;
  }

  save_ckpt("ckpt_final");
  result.env_steps = cfg.env_steps;
  result.grad_steps = grad_steps;
  result.episodes = episode_idx;
  result.last_episode_return = last_episode_return;
  manifest["grad_steps"] = grad_steps;
  manifest["episodes"] = episode_idx;
  manifest["wall_s_total"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest();
  return result;
}

}  // namespace iwm::train
