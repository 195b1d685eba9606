#include <iostream>

#include <CLI11.hpp>

#include "iwm/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"informed world models: training, evaluation and exact oracles"};
  app.require_subcommand(1);

  iwm::cli::RunSpec train_spec;
  std::string seeds_csv;
  bool informed_flag = true;
  bool informed_set = false;

  auto* train = app.add_subcommand("train", "train one run from a config file");
  train->add_option("--config", train_spec.config, "JSON config file")->required();
  train->add_option("--out", train_spec.out, "output run directory")->required();
  train->add_option("--seed", seeds_csv, "seed override");
  train->add_flag("--force", train_spec.force, "wipe the output directory first");
  train->add_option("--informed", informed_flag, "override the informed flag")
      ->each([&](const std::string&) { informed_set = true; });

  std::filesystem::path eval_run;
  std::string eval_ckpt = "ckpt_final";
  std::size_t eval_episodes = 20;
  std::uint64_t eval_seed = 0;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "evaluate a stored checkpoint");
  eval->add_option("--run", eval_run, "run directory")->required();
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint name (default ckpt_final)");
  eval->add_option("--episodes", eval_episodes, "number of evaluation episodes");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--out", eval_out, "also write the JSON report here");

  iwm::cli::RunSpec cmp_spec;
  std::string cmp_seeds;
  auto* compare = app.add_subcommand("compare", "paired informed/uninformed runs");
  compare->add_option("--config", cmp_spec.config, "JSON config file")->required();
  compare->add_option("--out", cmp_spec.out, "output directory")->required();
  compare->add_option("--seeds", cmp_seeds, "comma-separated seed list")->required();
  compare->add_flag("--force", cmp_spec.force, "wipe the output directory first");

  std::string oracle_suite;
  std::size_t oracle_count = 100;
  std::uint64_t oracle_seed = 0;
  std::string oracle_out;
  auto* oracle = app.add_subcommand("oracle", "run an exact verification suite");
  oracle->add_option("--suite", oracle_suite, "mi | sufficiency | elbo | markov-blanket")
      ->required();
  oracle->add_option("--count", oracle_count, "number of random instances");
  oracle->add_option("--seed", oracle_seed, "instance seed");
  oracle->add_option("--out", oracle_out, "write the JSON report here");

  std::string plot_runs;
  std::filesystem::path plot_out;
  auto* plot = app.add_subcommand("plot", "plot stored eval curves");
  plot->add_option("--runs", plot_runs, "comma-separated run directories")->required();
  plot->add_option("--out", plot_out, "output SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  auto parse_seeds = [](const std::string& csv) {
    std::vector<std::uint64_t> out;
    std::string token;
    std::istringstream ss(csv);
    while (std::getline(ss, token, ','))
      if (!token.empty()) out.push_back(std::stoull(token));
    return out;
  };

  try {
    if (train->parsed()) {
      train_spec.seeds = parse_seeds(seeds_csv);
      if (informed_set) train_spec.informed_override = informed_flag;
      return iwm::cli::cmd_train(train_spec);
    }
    if (eval->parsed()) {
      std::optional<std::filesystem::path> out;
      if (!eval_out.empty()) out = eval_out;
      return iwm::cli::cmd_eval(eval_run, eval_ckpt, eval_episodes, eval_seed, out);
    }
    if (compare->parsed()) {
      cmp_spec.seeds = parse_seeds(cmp_seeds);
      return iwm::cli::cmd_compare(cmp_spec);
    }
    if (oracle->parsed()) {
      std::optional<std::filesystem::path> out;
      if (!oracle_out.empty()) out = oracle_out;
      return iwm::cli::cmd_oracle(oracle_suite, oracle_count, oracle_seed, out);
    }
    if (plot->parsed()) {
      std::vector<std::filesystem::path> dirs;
      std::string token;
      std::istringstream ss(plot_runs);
      while (std::getline(ss, token, ','))
        if (!token.empty()) dirs.emplace_back(token);
      return iwm::cli::cmd_plot(dirs, plot_out);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
