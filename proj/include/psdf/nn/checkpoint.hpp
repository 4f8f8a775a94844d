#pragma once

#include "psdf/nn/parameters.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace psdf::nn {

/// On-disk layout: `<dir>/manifest.json` (tensor names, shapes, element
/// offsets, dtype, optimizer step, free-form config) and `<dir>/weights.bin`
/// holding the tensors back to back as little-endian floats. Float models are
/// stored as float32 and double models as float64, so a reload reproduces the
/// in-memory values bit for bit.
struct CheckpointManifest {
  nlohmann::json config;
  std::int64_t optimizer_step = 0;
  std::string dtype;
  std::vector<std::pair<std::string, Shape>> tensors;

  bool has_tensor(const std::string& name) const;
  bool has_tensor_prefix(const std::string& prefix) const;
};

template <typename T>
void save_checkpoint(const std::string& dir, const ParameterStore<T>& params, const nlohmann::json& config,
                     std::int64_t optimizer_step);

CheckpointManifest read_checkpoint_manifest(const std::string& dir);

/// Loads values into an already-constructed store; names and shapes must
/// match exactly. Returns the manifest.
template <typename T>
CheckpointManifest load_checkpoint(const std::string& dir, ParameterStore<T>& params);

}  // namespace psdf::nn
