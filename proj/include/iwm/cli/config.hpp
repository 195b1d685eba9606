#pragma once

#include <filesystem>

#include "iwm/train/trainer.hpp"

namespace iwm::cli {

// Parses a flat-key JSON config file (train.* / env.* / model.* namespaces).
// Unknown keys are hard errors; parse errors carry the byte position.
train::TrainConfig load_config_file(const std::filesystem::path& path);

}  // namespace iwm::cli
