#include "psdf/nn/checkpoint.hpp"

#include "psdf/binary_io.hpp"

#include <filesystem>
#include <fstream>

namespace psdf::nn {
namespace fs = std::filesystem;

bool CheckpointManifest::has_tensor(const std::string& name) const {
  for (const auto& [n, s] : tensors) {
    if (n == name) return true;
  }
  return false;
}

bool CheckpointManifest::has_tensor_prefix(const std::string& prefix) const {
  for (const auto& [n, s] : tensors) {
    if (n.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

template <typename T>
void save_checkpoint(const std::string& dir, const ParameterStore<T>& params, const nlohmann::json& config,
                     std::int64_t optimizer_step) {
  fs::create_directories(dir);
  constexpr bool wide = sizeof(T) == 8;
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["format"] = "psdf-checkpoint";
  manifest["dtype"] = wide ? "float64" : "float32";
  manifest["endianness"] = "little";
  manifest["optimizer_step"] = optimizer_step;
  manifest["config"] = config;
  manifest["blob"] = "weights.bin";
  nlohmann::json tensors = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& p : params) {
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"offset", offset}});
    offset += p.value.size();
  }
  manifest["tensors"] = tensors;

  // Write to temporaries and rename so an interrupted save keeps the old checkpoint.
  const fs::path blob = fs::path(dir) / "weights.bin";
  const fs::path blob_tmp = fs::path(dir) / "weights.bin.tmp";
  {
    std::ofstream out(blob_tmp, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint blob in " + dir);
    for (const auto& p : params) {
      if constexpr (wide) {
        io::write_le<double>(out, p.value.span());
      } else {
        io::write_le<float>(out, p.value.span());
      }
    }
  }
  const fs::path man = fs::path(dir) / "manifest.json";
  const fs::path man_tmp = fs::path(dir) / "manifest.json.tmp";
  {
    std::ofstream out(man_tmp);
    if (!out) throw DataError("cannot write checkpoint manifest in " + dir);
    out << manifest.dump(2) << '\n';
  }
  fs::rename(blob_tmp, blob);
  fs::rename(man_tmp, man);
}

CheckpointManifest read_checkpoint_manifest(const std::string& dir) {
  const fs::path man = fs::path(dir) / "manifest.json";
  std::ifstream in(man);
  if (!in) throw DataError("cannot read checkpoint manifest " + man.string());
  CheckpointManifest out;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.value("format", "") != "psdf-checkpoint") throw DataError("not a checkpoint: " + man.string());
    out.config = j.value("config", nlohmann::json::object());
    out.optimizer_step = j.value("optimizer_step", std::int64_t{0});
    out.dtype = j.value("dtype", "float32");
    for (const auto& t : j.at("tensors")) {
      out.tensors.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<Shape>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint manifest " + man.string() + ": " + e.what());
  }
  return out;
}

template <typename T>
CheckpointManifest load_checkpoint(const std::string& dir, ParameterStore<T>& params) {
  auto manifest = read_checkpoint_manifest(dir);
  if (manifest.tensors.size() != params.size()) {
    throw DataError("checkpoint " + dir + " holds " + std::to_string(manifest.tensors.size()) +
                    " tensors, model expects " + std::to_string(params.size()));
  }
  std::ifstream in(fs::path(dir) / "weights.bin", std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint blob in " + dir);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, shape] = manifest.tensors[i];
    if (name != params[i].name || shape != params[i].value.shape()) {
      throw DataError("checkpoint tensor " + name + " " + shape_str(shape) + " does not match model tensor " +
                      params[i].name + " " + shape_str(params[i].value.shape()));
    }
    const std::size_t count = static_cast<std::size_t>(params[i].value.size());
    const bool ok = manifest.dtype == "float64" ? io::read_le<double>(in, count, params[i].value.values())
                                                : io::read_le<float>(in, count, params[i].value.values());
    if (!ok) throw DataError("checkpoint blob in " + dir + " is truncated");
  }
  return manifest;
}

template void save_checkpoint<float>(const std::string&, const ParameterStore<float>&, const nlohmann::json&,
                                     std::int64_t);
template void save_checkpoint<double>(const std::string&, const ParameterStore<double>&, const nlohmann::json&,
                                      std::int64_t);
template CheckpointManifest load_checkpoint<float>(const std::string&, ParameterStore<float>&);
template CheckpointManifest load_checkpoint<double>(const std::string&, ParameterStore<double>&);

}  // namespace psdf::nn
