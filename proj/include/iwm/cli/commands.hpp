#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

namespace iwm::cli {

struct RunSpec {
  std::filesystem::path config;
  std::filesystem::path out;
  std::vector<std::uint64_t> seeds;        // empty: use the config's seed
  std::optional<bool> informed_override;
  bool force = false;                      // wipe the output directory first
};

// Train one run; artifacts land in spec.out. Returns the process exit code.
int cmd_train(const RunSpec& spec);

// Evaluate a stored checkpoint; prints a JSON report (and writes it when
// out_path is given).
int cmd_eval(const std::filesystem::path& run_dir, const std::string& checkpoint,
             std::size_t episodes, std::uint64_t seed,
             const std::optional<std::filesystem::path>& out_path);

// Paired informed/uninformed runs per seed, mean/min/max bands, a summary
// table ordered task,uninformed,informed and an overlay SVG. Runs execute
// concurrently up to the IWM_THREADS cap.
int cmd_compare(const RunSpec& spec);

// Random-instance verification suites; nonzero exit on any violation.
int cmd_oracle(const std::string& suite, std::size_t count, std::uint64_t seed,
               const std::optional<std::filesystem::path>& out_path);

// Re-plot stored eval curves; never re-runs training.
int cmd_plot(const std::vector<std::filesystem::path>& runs,
             const std::filesystem::path& out_svg);

// Concurrency cap from IWM_THREADS (hardware concurrency when unset).
std::size_t thread_cap();

// parsed eval.csv row
struct EvalCsvRow {
  std::int64_t env_step = 0;
  std::size_t episodes = 0;
  double mean = 0.0, min = 0.0, max = 0.0, stddev = 0.0, success_rate = 0.0;
};

std::vector<EvalCsvRow> read_eval_csv(const std::filesystem::path& path);

}  // namespace iwm::cli
