#include "psdf/pipeline/dataset.hpp"

#include "psdf/error.hpp"
#include "psdf/pipeline/scenes.hpp"
#include "psdf/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>

namespace psdf::pipeline {

namespace fs = std::filesystem;

void DatasetConfig::validate() const {
  if (scene_files.empty() && scenes < 1) throw DataError("dataset: scenes must be at least 1");
  if (views < 1 || views > kMaxViewsPerScene) {
    throw DataError("dataset: views per scene must be in [1, " + std::to_string(kMaxViewsPerScene) + "]");
  }
  // Pattern points lie within 2.1 of the origin on every axis.
  if (!(camera_distance > 2.1 * std::sqrt(3.0))) {
    throw DataError("dataset: camera distance must exceed 2.1*sqrt(3) to keep pattern points in front of the camera");
  }
  if (!(focal > 0.0)) throw DataError("dataset: focal must be positive");
  if (min_elevation_deg > max_elevation_deg || std::abs(min_elevation_deg) >= 90.0 ||
      std::abs(max_elevation_deg) >= 90.0) {
    throw DataError("dataset: elevation range must be ordered and inside (-90, 90)");
  }
  if (stage2_count == 0 || stage2_count > stage1_count || stage1_count % 4 != 0) {
    throw DataError("dataset: need 0 < stage2_count <= stage1_count and stage1_count divisible by 4");
  }
  for (const auto& t : templates) {
    bool known = false;
    for (const auto& n : scene_template_names()) known = known || n == t;
    if (!known) throw DataError("dataset: unknown scene template '" + t + "'");
  }
}

nlohmann::json dataset_config_to_json(const DatasetConfig& cfg) {
  return {{"scenes", cfg.scenes},
          {"views", cfg.views},
          {"seed", cfg.seed},
          {"templates", cfg.templates},
          {"scene_files", cfg.scene_files},
          {"camera_distance", cfg.camera_distance},
          {"focal", cfg.focal},
          {"elevation_deg", {cfg.min_elevation_deg, cfg.max_elevation_deg}},
          {"stage1_count", cfg.stage1_count},
          {"stage2_count", cfg.stage2_count},
          {"background", cfg.render.background}};
}

DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  DatasetConfig cfg;
  try {
    cfg.scenes = j.value("scenes", cfg.scenes);
    cfg.views = j.value("views", cfg.views);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.templates = j.value("templates", cfg.templates);
    cfg.scene_files = j.value("scene_files", cfg.scene_files);
    cfg.camera_distance = j.value("camera_distance", cfg.camera_distance);
    cfg.focal = j.value("focal", cfg.focal);
    if (j.contains("elevation_deg")) {
      const auto e = j.at("elevation_deg").get<std::array<double, 2>>();
      cfg.min_elevation_deg = e[0];
      cfg.max_elevation_deg = e[1];
    }
    cfg.stage1_count = j.value("stage1_count", cfg.stage1_count);
    cfg.stage2_count = j.value("stage2_count", cfg.stage2_count);
    cfg.render.background = j.value("background", cfg.render.background);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("dataset config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json scenes = nlohmann::json::array();
  for (const auto& s : m.scenes) {
    nlohmann::json views = nlohmann::json::array();
    for (const auto& v : s.views) views.push_back({{"image", v.image}, {"camera", v.camera}});
    scenes.push_back({{"id", s.id}, {"source", s.source}, {"scene", s.scene}, {"samples", s.samples}, {"views", views}});
  }
  return {{"version", m.version},
          {"format", "psdf-dataset"},
          {"config", dataset_config_to_json(m.config)},
          {"scenes", scenes},
          {"skipped", m.skipped}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.version = j.at("version").get<int>();
    if (m.version != 1) throw DataError("dataset manifest: unsupported version " + std::to_string(m.version));
    m.config = dataset_config_from_json(j.at("config"));
    for (const auto& s : j.at("scenes")) {
      SceneEntry e;
      e.id = s.at("id").get<std::string>();
      e.source = s.value("source", std::string());
      e.scene = s.at("scene").get<std::string>();
      e.samples = s.at("samples").get<std::string>();
      for (const auto& v : s.at("views")) e.views.push_back({v.at("image").get<std::string>(), v.at("camera").get<std::string>()});
      m.scenes.push_back(std::move(e));
    }
    m.skipped = j.value("skipped", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("dataset manifest: ") + e.what());
  }
  return m;
}

camera::CameraPose dataset_camera(const DatasetConfig& cfg, std::uint64_t scene_seed, int view) {
  CounterRng rng(scene_seed, 0x766965770000ULL + static_cast<std::uint64_t>(view));
  const double two_pi = 2.0 * std::numbers::pi;
  const double azimuth = two_pi * (view + rng.uniform()) / cfg.views;
  const double elevation = rng.uniform(cfg.min_elevation_deg, cfg.max_elevation_deg) * std::numbers::pi / 180.0;
  const geometry::Vec3 eye = cfg.camera_distance * geometry::Vec3(std::cos(elevation) * std::sin(azimuth),
                                                                  std::sin(elevation),
                                                                  std::cos(elevation) * std::cos(azimuth));
  return camera::look_at(eye, geometry::Vec3::Zero(), geometry::Vec3::UnitY(), cfg.focal);
}

namespace {

std::string two_digits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

DatasetManifest generate_dataset(const DatasetConfig& cfg, const fs::path& out, std::ostream* log) {
  cfg.validate();
  fs::create_directories(out);
  DatasetManifest manifest;
  manifest.config = cfg;
  const auto& templates = cfg.templates.empty() ? scene_template_names() : cfg.templates;
  const int count = cfg.scene_files.empty() ? cfg.scenes : static_cast<int>(cfg.scene_files.size());
  for (int i = 0; i < count; ++i) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "scene_%03d", i);
    const std::string id = id_buf;
    const std::uint64_t scene_seed = CounterRng(cfg.seed, 0x64617461).at(static_cast<std::uint64_t>(i));
    SceneEntry entry;
    entry.id = id;
    geometry::SdfScene scene;
    if (cfg.scene_files.empty()) {
      entry.source = templates[static_cast<std::size_t>(i) % templates.size()];
      scene = make_template_scene(entry.source, scene_seed);
    } else {
      entry.source = cfg.scene_files[i];
      scene = geometry::normalize_scene(geometry::load_scene(entry.source));
    }
    sampling::SampleSet samples;
    try {
      samples = sampling::sample_scene(scene, scene_seed, cfg.stage1_count, cfg.stage2_count);
    } catch (const DataError& e) {
      if (log) *log << "warning: skipping " << id << " (" << entry.source << "): " << e.what() << '\n';
      manifest.skipped.push_back(id);
      continue;
    }
    const fs::path dir = out / id;
    fs::create_directories(dir);
    entry.scene = id + "/scene.json";
    entry.samples = id + "/samples.bin";
    geometry::save_scene(scene, (out / entry.scene).string());
    sampling::save_sample_set(samples, (out / entry.samples).string());
    for (int v = 0; v < cfg.views; ++v) {
      const auto pose = dataset_camera(cfg, scene_seed, v);
      ViewEntry view{id + "/view_" + two_digits(v) + ".png", id + "/view_" + two_digits(v) + ".json"};
      render::write_png(render::render(scene, pose, cfg.render), (out / view.image).string());
      camera::save_pose(pose, (out / view.camera).string());
      entry.views.push_back(std::move(view));
    }
    if (log) *log << id << ": " << entry.source << ", " << cfg.views << " views\n";
    manifest.scenes.push_back(std::move(entry));
  }
  write_json(out / "manifest.json", manifest_to_json(manifest));
  return manifest;
}

DatasetManifest read_dataset_manifest(const fs::path& root) {
  const fs::path path = root / "manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("dataset manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

std::vector<TrainSample> load_dataset(const fs::path& root) {
  const auto manifest = read_dataset_manifest(root);
  std::vector<TrainSample> out;
  for (const auto& s : manifest.scenes) {
    auto scene = std::make_shared<const geometry::SdfScene>(geometry::load_scene((root / s.scene).string()));
    auto samples = std::make_shared<const sampling::SampleSet>(sampling::load_sample_set((root / s.samples).string()));
    for (std::size_t v = 0; v < s.views.size(); ++v) {
      TrainSample t;
      t.scene_id = s.id;
      t.view = static_cast<int>(v);
      t.image = render::read_png((root / s.views[v].image).string());
      t.pose = camera::load_pose((root / s.views[v].camera).string());
      t.samples = samples;
      t.scene = scene;
      out.push_back(std::move(t));
    }
  }
  if (out.empty()) throw DataError("dataset " + root.string() + " contains no samples");
  return out;
}

}  // namespace psdf::pipeline
