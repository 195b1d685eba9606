#include "iwm/cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "iwm/cli/config.hpp"
#include "iwm/cli/svg.hpp"
#include "iwm/envs/registry.hpp"
#include "iwm/oracle/suites.hpp"
#include "iwm/train/trainer.hpp"

namespace iwm::cli {

namespace {

void wipe_if_forced(const std::filesystem::path& out, bool force) {
  if (force) std::filesystem::remove_all(out);
}

}  // namespace

std::size_t thread_cap() {
  if (const char* env = std::getenv("IWM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::vector<EvalCsvRow> read_eval_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  check(f.good(), "read_eval_csv: cannot open " + path.string());
  std::string line;
  std::getline(f, line);  // header
  std::vector<EvalCsvRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    EvalCsvRow r;
    std::istringstream ss(line);
    char comma;
    ss >> r.env_step >> comma >> r.episodes >> comma >> r.mean >> comma >> r.min >> comma >>
        r.max >> comma >> r.stddev >> comma >> r.success_rate;
    rows.push_back(r);
  }
  return rows;
}

int cmd_train(const RunSpec& spec) {
  auto cfg = load_config_file(spec.config);
  if (!spec.seeds.empty()) cfg.seed = spec.seeds.front();
  if (spec.informed_override) cfg.informed = *spec.informed_override;
  wipe_if_forced(spec.out, spec.force);
  auto result = train::run(cfg, spec.out);
  std::cout << "run complete: " << result.env_steps << " env steps, " << result.grad_steps
            << " gradient steps, " << result.episodes << " episodes -> " << spec.out.string()
            << "\n";
  return 0;
}

int cmd_eval(const std::filesystem::path& run_dir, const std::string& checkpoint,
             std::size_t episodes, std::uint64_t seed,
             const std::optional<std::filesystem::path>& out_path) {
  auto agent = train::load_agent(run_dir, checkpoint);
  auto env = envs::make_env(agent.config.env_name);
  auto stats = train::evaluate(agent.model, agent.policy, *env, episodes, seed,
                               agent.config.success_return, agent.config.eval_episode_cap);
  nlohmann::json report{{"run", run_dir.string()},
                        {"checkpoint", checkpoint},
                        {"env", agent.config.env_name},
                        {"episodes", stats.episodes},
                        {"seed", seed},
                        {"mean_return", stats.mean},
                        {"min_return", stats.min},
                        {"max_return", stats.max},
                        {"stddev", stats.stddev},
                        {"success_rate", stats.success_rate}};
  std::cout << report.dump(2) << "\n";
  if (out_path) {
    std::ofstream f(*out_path);
    f << report.dump(2) << "\n";
  }
  return 0;
}

int cmd_compare(const RunSpec& spec) {
  auto base = load_config_file(spec.config);
  check(spec.seeds.size() >= 2, "compare: need at least two seeds");
  check(base.eval_interval > 0, "compare: the config must set train.eval_interval");
  wipe_if_forced(spec.out, spec.force);
  std::filesystem::create_directories(spec.out);

  struct Job {
    train::TrainConfig cfg;
    std::filesystem::path dir;
    train::RunResult result;
    std::string error;
  };
  std::vector<Job> jobs;
  for (bool informed : {true, false})
    for (auto seed : spec.seeds) {
      train::TrainConfig cfg = base;
      cfg.informed = informed;
      cfg.seed = seed;
      jobs.push_back({cfg,
                      spec.out / ((informed ? "informed-seed" : "uninformed-seed") +
                                  std::to_string(seed)),
                      {},
                      {}});
    }

  // isolated runs, a fixed pool of workers
  const std::size_t workers = std::min(thread_cap(), jobs.size());
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        try {
          jobs[i].result = train::run(jobs[i].cfg, jobs[i].dir);
        } catch (const std::exception& err) {
          jobs[i].error = err.what();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (const auto& job : jobs)
    check(job.error.empty(), "compare: run " + job.dir.string() + " failed: " + job.error);

  // aggregate curves per arm; every run must share the eval grid
  auto aggregate = [&](bool informed) {
    std::vector<const train::RunResult*> runs;
    for (const auto& job : jobs)
      if (job.cfg.informed == informed) runs.push_back(&job.result);
    const auto& grid = runs.front()->eval_curve;
    nlohmann::json curve;
    std::vector<double> steps, mean, lo, hi, succ;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double m = 0.0, l = 1e300, h = -1e300, sr = 0.0;
      for (const auto* r : runs) {
        check(r->eval_curve.size() == grid.size() &&
                  r->eval_curve[i].env_step == grid[i].env_step,
              "compare: mismatched run lengths, eval grids do not align");
        const auto& st = r->eval_curve[i].stats;
        m += st.mean;
        l = std::min(l, st.mean);
        h = std::max(h, st.mean);
        sr += st.success_rate;
      }
      m /= static_cast<double>(runs.size());
      sr /= static_cast<double>(runs.size());
      steps.push_back(static_cast<double>(grid[i].env_step));
      mean.push_back(m);
      lo.push_back(l);
      hi.push_back(h);
      succ.push_back(sr);
    }
    curve["env_step"] = steps;
    curve["mean"] = mean;
    curve["min"] = lo;
    curve["max"] = hi;
    curve["success_rate"] = succ;
    return curve;
  };
  nlohmann::json informed_curve = aggregate(true);
  nlohmann::json uninformed_curve = aggregate(false);

  auto final_stat = [&](bool informed) {
    std::vector<double> finals;
    for (const auto& job : jobs)
      if (job.cfg.informed == informed && !job.result.eval_curve.empty())
        finals.push_back(job.result.eval_curve.back().stats.mean);
    double m = 0.0;
    for (double v : finals) m += v;
    m /= static_cast<double>(finals.size());
    double var = 0.0;
    for (double v : finals) var += (v - m) * (v - m);
    const double sd = finals.size() > 1 ? std::sqrt(var / static_cast<double>(finals.size() - 1))
                                        : 0.0;
    return std::make_pair(m, sd);
  };
  const auto [inf_mean, inf_sd] = final_stat(true);
  const auto [uninf_mean, uninf_sd] = final_stat(false);

  nlohmann::json summary;
  summary["task"] = base.env_name;
  summary["seeds"] = spec.seeds;
  summary["config"] = base.to_json();
  summary["columns"] = {"task", "uninformed", "informed"};
  summary["table"] = {{base.env_name, uninf_mean, inf_mean}};
  summary["final_return"] = {{"uninformed", {{"mean", uninf_mean}, {"stddev", uninf_sd}}},
                             {"informed", {{"mean", inf_mean}, {"stddev", inf_sd}}}};
  summary["curves"] = {{"informed", informed_curve}, {"uninformed", uninformed_curve}};
  {
    std::ofstream f(spec.out / "summary.json");
    f << summary.dump(2) << "\n";
  }

  auto series_of = [](const nlohmann::json& curve, const std::string& name,
                      const std::string& color) {
    Series s;
    s.name = name;
    s.color = color;
    s.xs = curve.at("env_step").get<std::vector<double>>();
    s.mean = curve.at("mean").get<std::vector<double>>();
    s.lo = curve.at("min").get<std::vector<double>>();
    s.hi = curve.at("max").get<std::vector<double>>();
    return s;
  };
  const std::string svg = line_plot_svg(
      base.env_name + ": uninformed vs informed", "environment steps", "evaluation return",
      {series_of(uninformed_curve, "uninformed", "#d62728"),
       series_of(informed_curve, "informed", "#1f77b4")});
  {
    std::ofstream f(spec.out / "compare.svg");
    f << svg;
  }
  std::cout << "compare complete: " << spec.out.string() << "\n";
  return 0;
}

int cmd_oracle(const std::string& suite, std::size_t count, std::uint64_t seed,
               const std::optional<std::filesystem::path>& out_path) {
  nlohmann::json report = oracle::run_suite(suite, count, seed);
  std::cout << report.dump(2) << "\n";
  if (out_path) {
    std::ofstream f(*out_path);
    f << report.dump(2) << "\n";
  }
  return report.at("pass").get<bool>() ? 0 : 1;
}

int cmd_plot(const std::vector<std::filesystem::path>& runs,
             const std::filesystem::path& out_svg) {
  check(!runs.empty(), "plot: no run directories given");
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::vector<Series> series;
  nlohmann::json manifest;
  manifest["runs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto rows = read_eval_csv(runs[i] / "eval.csv");
    check(!rows.empty(), "plot: " + runs[i].string() + " has an empty eval.csv");
    Series s;
    s.name = runs[i].filename().string();
    s.color = kColors[i % 8];
    for (const auto& r : rows) {
      s.xs.push_back(static_cast<double>(r.env_step));
      s.mean.push_back(r.mean);
      s.lo.push_back(r.min);
      s.hi.push_back(r.max);
    }
    series.push_back(std::move(s));
    manifest["runs"].push_back(runs[i].string());
  }
  std::ofstream f(out_svg);
  check(f.good(), "plot: cannot open " + out_svg.string());
  f << line_plot_svg("evaluation return", "environment steps", "return", series);
  std::filesystem::path mpath = out_svg;
  mpath += ".manifest.json";
  std::ofstream mf(mpath);
  mf << manifest.dump(2) << "\n";
  return 0;
}

}  // namespace iwm::cli
