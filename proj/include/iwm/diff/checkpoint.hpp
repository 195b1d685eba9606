#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "iwm/diff/nn.hpp"

namespace iwm::diff {

inline constexpr const char* kCheckpointHeader = "IWM-CKPT-1";

// Writes <prefix>.json (manifest: header, names, shapes, byte offsets, plus
// optional sidecar metadata) and <prefix>.bin (flat little-endian float64).
void save_checkpoint(const std::filesystem::path& prefix, const ParamList& params,
                     const nlohmann::json& sidecar = nlohmann::json::object());

// Loads into an identically shaped parameter list; bit-exact roundtrip.
// Returns the sidecar metadata stored in the manifest.
nlohmann::json load_checkpoint(const std::filesystem::path& prefix, const ParamList& params);

}  // namespace iwm::diff
