#include "iwm/envs/registry.hpp"

#include <fstream>

#include "iwm/envs/flicker.hpp"
#include "iwm/envs/hike.hpp"
#include "iwm/envs/tabular.hpp"
#include "iwm/envs/tmaze.hpp"

namespace iwm::envs {

namespace {

// Binds the information channel to the observation (i = o), the exact
// ablation the uninformed baseline trains against.
class ObsAsInfoEnv final : public Env {
public:
  explicit ObsAsInfoEnv(std::unique_ptr<Env> inner) : inner_(std::move(inner)) {}

  EnvDescriptor descriptor() const override {
    EnvDescriptor d = inner_->descriptor();
    d.info_dim = d.obs_dim;
    return d;
  }
  std::pair<std::vector<double>, std::vector<double>> reset(std::uint64_t seed) override {
    auto [info, obs] = inner_->reset(seed);
    (void)info;
    return {obs, obs};
  }
  InformedStep step(int action) override {
    InformedStep s = inner_->step(action);
    s.information = s.observation;
    return s;
  }
  bool episode_over() const override { return inner_->episode_over(); }

private:
  std::unique_ptr<Env> inner_;
};

}  // namespace

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "tiger") return std::make_unique<TabularEnv>(tiger_pomdp(), 20);

  if (name.rfind("obsinfo:", 0) == 0)
    return std::make_unique<ObsAsInfoEnv>(make_env(name.substr(8)));

  if (name.rfind("tmaze-", 0) == 0) {
    const std::string tail = name.substr(6);
    check(!tail.empty() && tail.find_first_not_of("0123456789") == std::string::npos,
          "make_env: bad corridor length in '" + name + "'");
    return std::make_unique<TMazeEnv>(std::stoul(tail));
  }

  if (name.rfind("hike/", 0) == 0) {
    const std::string variant = name.substr(5);
    const auto dash = variant.find('-');
    check(dash != std::string::npos, "make_env: hike variant must be '<obs>-<init>'");
    const std::string obs = variant.substr(0, dash), init = variant.substr(dash + 1);
    check(obs == "pos" || obs == "alt", "make_env: hike observation must be pos or alt");
    check(init == "fix" || init == "var", "make_env: hike init must be fix or var");
    return std::make_unique<MountainHikeEnv>(obs == "alt", init == "var");
  }

  if (name.rfind("flicker(p=", 0) == 0) {
    const auto close = name.find("):");
    check(close != std::string::npos, "make_env: flicker syntax is flicker(p=<x>):<name>");
    const std::string pstr = name.substr(10, close - 10);
    double p = 0.0;
    try {
      std::size_t used = 0;
      p = std::stod(pstr, &used);
      check(used == pstr.size(), "");
    } catch (...) {
      throw ContractViolation("make_env: cannot parse flicker probability '" + pstr + "'");
    }
    return std::make_unique<FlickerEnv>(make_env(name.substr(close + 2)), p);
  }

  if (name.rfind("tabular:", 0) == 0) {
    const std::string path = name.substr(8);
    std::ifstream f(path);
    check(f.good(), "make_env: cannot open tabular file '" + path + "'");
    return std::make_unique<TabularEnv>(TabularInformedPomdp::from_json(nlohmann::json::parse(f)),
                                        100);
  }

  throw ContractViolation("make_env: unknown environment '" + name + "'");
}

}  // namespace iwm::envs
