#include <cmath>
#include <fstream>

#include "iwm/diff/checkpoint.hpp"
#include "iwm/envs/registry.hpp"
#include "iwm/train/trainer.hpp"

namespace iwm::train {

using namespace iwm::diff;

EvalStats evaluate(const wm::WorldModel& model, const behavior::Policy& policy, envs::Env& env,
                   std::size_t episodes, std::uint64_t seed, double success_return,
                   std::size_t episode_cap) {
  check(episodes >= 1, "evaluate: need at least one episode");
  const envs::EnvDescriptor desc = env.descriptor();
  check(desc.obs_dim == model.cfg.obs_dim && desc.actions.dim() == model.cfg.action_dim,
        "evaluate: environment does not match the model descriptor");

  Rng rng(seed);
  std::vector<double> returns;
  returns.reserve(episodes);
  std::size_t successes = 0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    // the execution path touches only observations, rewards, continuations
    auto [info0, obs] = env.reset(rng.next_u64());
    (void)info0;  // information is not available at execution time
    std::vector<double> z(model.cfg.z_dim, 0.0);
    std::vector<double> a_prev(model.cfg.action_dim, 0.0);
    double ret = 0.0;
    std::size_t len = 0;
    while (!env.episode_over() && (episode_cap == 0 || len < episode_cap)) {
      wm::filter_step(model, z, a_prev, obs, rng);
      const int action = policy.sample_discrete(z, rng);
      envs::InformedStep step = env.step(action);
      ret += step.reward;
      ++len;
      obs = std::move(step.observation);
      std::fill(a_prev.begin(), a_prev.end(), 0.0);
      a_prev[static_cast<std::size_t>(action)] = 1.0;
      if (!step.continuation) break;
    }
    returns.push_back(ret);
    if (ret >= success_return) ++successes;
  }

  EvalStats stats;
  stats.episodes = episodes;
  stats.min = returns[0];
  stats.max = returns[0];
  double sum = 0.0;
  for (double r : returns) {
    sum += r;
    stats.min = std::min(stats.min, r);
    stats.max = std::max(stats.max, r);
  }
  stats.mean = sum / static_cast<double>(episodes);
  double var = 0.0;
  for (double r : returns) var += (r - stats.mean) * (r - stats.mean);
  stats.stddev = episodes > 1 ? std::sqrt(var / static_cast<double>(episodes - 1)) : 0.0;
  stats.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
  return stats;
}

LoadedAgent load_agent(const std::filesystem::path& run_dir, const std::string& checkpoint_name) {
  const auto manifest_path = run_dir / "manifest.json";
  std::ifstream mf(manifest_path);
  check(mf.good(), "load_agent: cannot open " + manifest_path.string());
  nlohmann::json manifest = nlohmann::json::parse(mf);

  LoadedAgent agent;
  agent.config = config_from_json(manifest.at("config"));
  auto env = envs::make_env(agent.config.env_name);
  const envs::EnvDescriptor desc = env->descriptor();
  agent.config.model.obs_dim = desc.obs_dim;
  agent.config.model.info_dim = agent.config.informed ? desc.info_dim : desc.obs_dim;
  agent.config.model.action_dim = desc.actions.dim();

  Rng init_rng(Rng::substream(agent.config.seed, 0));
  agent.model = wm::WorldModel(agent.config.model, init_rng);
  agent.policy = behavior::Policy({true, desc.actions.n, {}}, agent.config.model.z_dim,
                                  agent.config.model.hidden, init_rng);
  agent.critic = behavior::Critic(agent.config.model.z_dim, agent.config.model.hidden, init_rng);

  ParamList all;
  all.append(agent.model.params());
  all.append(agent.policy.params());
  all.append(agent.critic.params());
  load_checkpoint(run_dir / checkpoint_name, all);
  return agent;
}

}  // namespace iwm::train
