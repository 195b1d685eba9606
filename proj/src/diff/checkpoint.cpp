#include "iwm/diff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace iwm::diff {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; byte swapping not implemented");

void save_checkpoint(const std::filesystem::path& prefix, const ParamList& params,
                     const nlohmann::json& sidecar) {
  nlohmann::json manifest;
  manifest["header"] = kCheckpointHeader;
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& p : params.items()) {
    tensors.push_back({{"name", p.name},
                       {"shape", p.tensor->shape},
                       {"offset", offset}});
    offset += p.tensor->size() * sizeof(double);
  }
  manifest["tensors"] = std::move(tensors);
  manifest["blob_bytes"] = offset;
  if (!sidecar.empty()) manifest["sidecar"] = sidecar;

  std::filesystem::path json_path = prefix;
  json_path += ".json";
  std::ofstream jf(json_path);
  check(jf.good(), "save_checkpoint: cannot open " + json_path.string());
  jf << manifest.dump(2) << "\n";

  std::filesystem::path bin_path = prefix;
  bin_path += ".bin";
  std::ofstream bf(bin_path, std::ios::binary);
  check(bf.good(), "save_checkpoint: cannot open " + bin_path.string());
  for (const auto& p : params.items())
    bf.write(reinterpret_cast<const char*>(p.tensor->data.data()),
             static_cast<std::streamsize>(p.tensor->size() * sizeof(double)));
}

nlohmann::json load_checkpoint(const std::filesystem::path& prefix, const ParamList& params) {
  std::filesystem::path json_path = prefix;
  json_path += ".json";
  std::ifstream jf(json_path);
  check(jf.good(), "load_checkpoint: cannot open " + json_path.string());
  nlohmann::json manifest = nlohmann::json::parse(jf);
  check(manifest.value("header", "") == kCheckpointHeader,
        "load_checkpoint: bad header in " + json_path.string());

  const auto& tensors = manifest.at("tensors");
  check(tensors.size() == params.items().size(),
        "load_checkpoint: tensor count mismatch (" + std::to_string(tensors.size()) + " stored, " +
            std::to_string(params.items().size()) + " expected)");

  std::filesystem::path bin_path = prefix;
  bin_path += ".bin";
  std::ifstream bf(bin_path, std::ios::binary);
  check(bf.good(), "load_checkpoint: cannot open " + bin_path.string());

  for (std::size_t i = 0; i < params.items().size(); ++i) {
    const auto& entry = tensors[i];
    const auto& p = params.items()[i];
    check(entry.at("name").get<std::string>() == p.name,
          "load_checkpoint: parameter order mismatch at '" + p.name + "'");
    const Shape shape = entry.at("shape").get<Shape>();
    check(shape == p.tensor->shape, "load_checkpoint: shape mismatch for '" + p.name + "'");
    bf.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::size_t>()));
    bf.read(reinterpret_cast<char*>(p.tensor->data.data()),
            static_cast<std::streamsize>(p.tensor->size() * sizeof(double)));
    check(bf.good(), "load_checkpoint: truncated blob for '" + p.name + "'");
  }
  return manifest.value("sidecar", nlohmann::json::object());
}

}  // namespace iwm::diff
