#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "iwm/behavior/behavior.hpp"
#include "iwm/envs/env.hpp"
#include "iwm/train/replay.hpp"
#include "iwm/wm/worldmodel.hpp"

namespace iwm::train {

inline constexpr const char* kVersion = "iwm-0.1.0";

struct TrainConfig {
  // Algorithm hyperparameters
  std::int64_t env_steps = 20000;       // S
  std::int64_t before_training = 1024;  // F, in stored windows
  double train_ratio = 0.5;             // R
  std::size_t window = 16;              // W
  std::size_t horizon = 8;              // K
  std::size_t batch_size = 16;          // N
  std::size_t capacity = 100000;        // B, replay capacity in windows
  double gamma = -1.0;                  // negative: take the env's discount
  double lambda = 0.95;
  std::uint64_t seed = 0;
  std::string env_name;
  bool informed = true;  // false binds the information channel to the observation

  // model / behavior
  wm::WorldModelConfig model;  // obs/info/action dims are filled from the env
  double model_lr = 3e-4;
  double policy_lr = 3e-4;
  double critic_lr = 3e-4;
  double clip_norm = 100.0;
  double entropy_weight = 3e-4;

  // bookkeeping
  std::size_t window_stride = 1;         // 1 stores overlapping windows every step
  std::int64_t eval_interval = 0;        // env steps between evaluations; 0 = off
  std::size_t eval_episodes = 10;
  double success_return = 1e-9;          // an episode counts as success at >= this return
  std::size_t eval_episode_cap = 0;      // 0: rely on the env's own termination
  std::int64_t checkpoint_interval = 0;  // env steps; 0 = final checkpoint only
  std::int64_t log_interval = 1000;
  std::size_t episode_cap = 0;           // extra truncation during interaction
  bool wall_clock = false;               // real wall time in metrics breaks byte determinism

  void validate() const;
  nlohmann::json to_json() const;
};

struct EvalStats {
  double mean = 0.0, min = 0.0, max = 0.0, stddev = 0.0;
  double success_rate = 0.0;
  std::size_t episodes = 0;
};

struct EvalPoint {
  std::int64_t env_step = 0;
  EvalStats stats;
};

struct RunResult {
  std::filesystem::path run_dir;
  std::int64_t env_steps = 0;
  std::int64_t grad_steps = 0;
  std::size_t episodes = 0;
  double last_episode_return = 0.0;
  std::vector<EvalPoint> eval_curve;
};

// Trained artifacts live in out_dir: metrics.csv, eval.csv, manifest.json,
// ckpt_final.{json,bin} and periodic ckpt_step<k>.{json,bin}. On a non-finite
// loss the run aborts with partial artifacts and the last checkpoint intact.
RunResult run(const TrainConfig& cfg, const std::filesystem::path& out_dir);

// Execution-POMDP rollouts: encoder + recurrence + latent policy, sampling
// actions, never touching the information channel.
EvalStats evaluate(const wm::WorldModel& model, const behavior::Policy& policy, envs::Env& env,
                   std::size_t episodes, std::uint64_t seed, double success_return,
                   std::size_t episode_cap = 0);

// Reconstructs model and policy from a run directory's checkpoint.
struct LoadedAgent {
  TrainConfig config;
  wm::WorldModel model;
  behavior::Policy policy;
  behavior::Critic critic;
};

LoadedAgent load_agent(const std::filesystem::path& run_dir, const std::string& checkpoint_name);

TrainConfig config_from_json(const nlohmann::json& j);

}  // namespace iwm::train
