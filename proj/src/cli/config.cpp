#include "iwm/cli/config.hpp"

#include <fstream>

namespace iwm::cli {

train::TrainConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  check(f.good(), "config: cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& err) {
    throw ContractViolation("config: " + path.string() + ": " + err.what());
  }
  check(j.is_object(), "config: " + path.string() + ": top level must be a JSON object");
  return train::config_from_json(j);
}

}  // namespace iwm::cli
