#pragma once

#include "psdf/camera/camera.hpp"
#include "psdf/model/config.hpp"
#include "psdf/model/pattern.hpp"
#include "psdf/nn/gradcheck.hpp"
#include "psdf/nn/parameters.hpp"
#include "psdf/render/image.hpp"

#include <array>
#include <span>
#include <vector>

namespace psdf::model {

using nn::Var;

/// Parameters of a model registered on one tape, in store order.
template <typename T>
struct Graph {
  nn::Tape<T>& tape;
  std::vector<Var> params;
};

struct FeaturePyramid {
  /// Scale s is [H_s, W_s, D_s].
  std::array<Var, kScales> maps;
  /// [1, global_dim].
  Var global;
};

struct PatternOutput {
  /// [B, 3n] pattern points (init + offsets), point-major.
  Var points;
  /// [B, 3n] generator offsets; equal to zero for fixed patterns.
  Var offsets;
};

/// Per-scale features of the 1+n points of every query; rows are ordered
/// query-major (query b owns rows b(1+n) .. b(1+n)+n, its own point first).
struct LocalFeatures {
  std::array<Var, kScales> scales;
};

struct SdfHeads {
  Var global_head;  // [B, 1]
  Var local_head;   // [B, 1]
  Var sdf;          // global_head + local_head
};

struct ForwardResult {
  PatternOutput pattern;
  SdfHeads heads;
};

/// Perspective projection of points [M, 3] to pixels [M, 2] with the
/// per-coordinate image-bounds reset. The gradient with respect to a point is
/// the projection Jacobian, zeroed for coordinates the reset moved. Throws
/// GeometryError for points at or behind the camera plane.
template <typename T>
Var project_points(nn::Tape<T>& tape, Var points, const camera::CameraPose& pose);

/// [3, H, W] tensor of an RGB image.
template <typename T>
nn::Tensor<T> image_to_tensor(const render::Image& image);

/// Image encoder, pattern generator, per-scale aggregation and the two SDF
/// heads. Parameters live in a named store; graph methods take a Graph that
/// binds them on a tape.
template <typename T>
class SdfModel {
 public:
  /// Builds the parameter layout and draws the initial weights from cfg.seed.
  explicit SdfModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore<T>& parameters() { return store_; }
  const nn::ParameterStore<T>& parameters() const { return store_; }
  int pattern_count() const { return cfg_.pattern.count(); }

  Graph<T> bind(nn::Tape<T>& tape) const { return {tape, store_.bind(tape)}; }

  FeaturePyramid encode(Graph<T>& g, const render::Image& image) const;
  /// `image` is a [3, H, W] tensor.
  FeaturePyramid encode(Graph<T>& g, Var image) const;

  /// Constant [B, 3n] tensor of initial pattern points.
  Var init_points(Graph<T>& g, std::span<const Vec3> queries) const;
  /// queries [B, 3], init [B, 3n].
  PatternOutput generate_pattern(Graph<T>& g, Var queries, Var init) const;
  /// points [M, 3] -> per-scale features [M, D_s].
  LocalFeatures gather_local(Graph<T>& g, const FeaturePyramid& pyramid, const camera::CameraPose& pose,
                             Var points) const;
  /// Fuses the 1+n point features of each query -> [B, sum D_s].
  Var aggregate(Graph<T>& g, const LocalFeatures& features) const;
  /// queries [B, 3], fused [B, sum D_s], global [1, G].
  SdfHeads predict_sdf(Graph<T>& g, Var queries, Var fused, Var global) const;

  ForwardResult forward(Graph<T>& g, const FeaturePyramid& pyramid, const camera::CameraPose& pose,
                        std::span<const Vec3> queries) const;

  /// Gradient-free SDF prediction, evaluated in chunks of `chunk` queries.
  std::vector<T> predict(const render::Image& image, const camera::CameraPose& pose,
                         std::span<const Vec3> queries, std::size_t chunk = 1024) const;
  /// Gradient-free generator offsets: n vectors per query, query-major.
  std::vector<Vec3> pattern_offsets(std::span<const Vec3> queries, std::size_t chunk = 1024) const;

 private:
  struct Dense {
    std::size_t weight;
    std::size_t bias;
  };
  struct Conv {
    std::size_t weight;
    std::size_t bias;
    int stage;
  };

  Dense add_dense(const std::string& name, int in, int out, double init_gain);
  Var apply(Graph<T>& g, const Dense& layer, Var x) const;
  Var mlp(Graph<T>& g, const std::vector<Dense>& layers, Var x, bool relu_last) const;

  ModelConfig cfg_;
  nn::ParameterStore<T> store_;
  std::vector<Conv> convs_;
  Dense global_;
  std::vector<Dense> generator_point_;
  std::vector<Dense> generator_head_;
  std::array<Dense, kScales> aggregate_{};
  std::vector<Dense> point_lift_;
  std::vector<Dense> global_head_;
  std::vector<Dense> local_head_;
};

/// Full-graph finite-difference check on a mini model with an 8x8 image and
/// three query points, in double precision.
nn::GradCheckReport check_model_gradients(PatternKind kind, std::uint64_t seed = 7,
                                          std::size_t max_entries_per_input = 6);

}  // namespace psdf::model
