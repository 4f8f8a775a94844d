#pragma once

#include "psdf/camera/camera.hpp"
#include "psdf/geometry/scene.hpp"
#include "psdf/render/image.hpp"
#include "psdf/render/renderer.hpp"
#include "psdf/sampling/sampling.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace psdf::pipeline {

inline constexpr int kMaxViewsPerScene = 24;

struct DatasetConfig {
  int scenes = 8;
  int views = 4;
  std::uint64_t seed = 1;
  /// Template names cycled over the scenes; empty uses every template.
  std::vector<std::string> templates;
  /// Explicit scene JSON files used instead of templates when non-empty.
  std::vector<std::string> scene_files;
  double camera_distance = 4.0;
  double focal = 150.0;
  double min_elevation_deg = -20.0;
  double max_elevation_deg = 40.0;
  std::size_t stage1_count = 32768;
  std::size_t stage2_count = 2048;
  render::RenderOptions render;

  void validate() const;
};

nlohmann::json dataset_config_to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

struct ViewEntry {
  std::string image;   // relative to the dataset root
  std::string camera;  // relative to the dataset root
};

struct SceneEntry {
  std::string id;
  std::string source;  // template name or scene file
  std::string scene;   // relative path of the normalized scene JSON
  std::string samples;
  std::vector<ViewEntry> views;
};

struct DatasetManifest {
  int version = 1;
  DatasetConfig config;
  std::vector<SceneEntry> scenes;
  /// Scenes dropped because a sampling band was unreachable.
  std::vector<std::string> skipped;
};

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

/// Writes `<out>/manifest.json` plus, per scene, `scene.json`, `samples.bin`
/// and `view_XX.png` / `view_XX.json` for every view. Scenes whose sampling
/// fails are skipped with a warning on `log`.
DatasetManifest generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& out, std::ostream* log = nullptr);

DatasetManifest read_dataset_manifest(const std::filesystem::path& root);

struct TrainSample {
  std::string scene_id;
  int view = 0;
  render::Image image;
  camera::CameraPose pose;
  std::shared_ptr<const sampling::SampleSet> samples;
  std::shared_ptr<const geometry::SdfScene> scene;
};

/// Every (scene, view) pair of a dataset, in manifest order.
std::vector<TrainSample> load_dataset(const std::filesystem::path& root);

/// Camera for view `view` of `views`: azimuths spread evenly with seeded
/// jitter, seeded elevation, looking at the origin with +y up.
camera::CameraPose dataset_camera(const DatasetConfig& cfg, std::uint64_t scene_seed, int view);

}  // namespace psdf::pipeline
