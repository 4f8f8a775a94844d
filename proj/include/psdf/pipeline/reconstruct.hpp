#pragma once

#include "psdf/eval/metrics.hpp"
#include "psdf/geometry/grid.hpp"
#include "psdf/geometry/mesh.hpp"
#include "psdf/model/model.hpp"
#include "psdf/pipeline/dataset.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace psdf::pipeline {

inline constexpr int kTestGridRes = 65;

/// Precision the checkpoint was saved in: "float32" or "float64".
std::string checkpoint_dtype(const std::filesystem::path& dir);

/// Rebuilds the model from the checkpoint's stored config and weights.
template <typename T>
model::SdfModel<T> load_model(const std::filesystem::path& dir);

/// Predicted SDF on the res^3 test grid over [-1, 1]^3.
template <typename T>
geometry::SdfGrid predict_grid(const model::SdfModel<T>& net, const render::Image& image,
                               const camera::CameraPose& pose, int res = kTestGridRes);

/// Zero iso-surface of the predicted grid. The grid is padded with one
/// positive layer so surfaces touching the domain boundary close up. An
/// all-positive field yields an empty mesh.
template <typename T>
geometry::Mesh reconstruct(const model::SdfModel<T>& net, const render::Image& image, const camera::CameraPose& pose,
                           int res = kTestGridRes);

/// Reference surface of an analytic scene: marching cubes on the padded
/// res^3 grid.
geometry::Mesh reference_mesh(const geometry::SdfScene& scene, int res = kTestGridRes);

struct SampleMetrics {
  std::string scene_id;
  int view = 0;
  bool empty = false;
  eval::MetricsReport report;
};

struct EvaluationSummary {
  std::vector<SampleMetrics> samples;
  /// Means over non-empty reconstructions; iou averages every sample.
  eval::MetricsReport mean;
  std::size_t empty_count = 0;
};

nlohmann::json summary_to_json(const EvaluationSummary& summary);

struct EvaluateOptions {
  int grid_res = kTestGridRes;
  eval::MetricsOptions metrics;
  /// Evaluate at most this many samples (0 = all).
  std::size_t limit = 0;
  /// Directory for reconstructed OBJ files; unset skips writing.
  std::optional<std::filesystem::path> mesh_dir;
};

/// Reconstructs every sample and scores it against its analytic scene.
template <typename T>
EvaluationSummary evaluate(const model::SdfModel<T>& net, const std::vector<TrainSample>& data,
                           const EvaluateOptions& options = {}, std::ostream* log = nullptr);

}  // namespace psdf::pipeline
