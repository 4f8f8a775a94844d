#pragma once

#include "psdf/nn/loss.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace psdf::model {

inline constexpr int kScales = 6;

enum class PatternKind {
  Uniform6,     // face centers of a cube of edge l around the query
  NonUniform6,  // six axis/plane reflections of the query
  NonUniform3,  // first three reflections
  Rigid3,       // fixed reflections 1, 2 and 6; no generator
  None,         // query feature only
};

std::string pattern_kind_name(PatternKind kind);
/// Accepts the short names (uniform6, nonuniform6, nonuniform3, rigid3, none)
/// and the hyphenated forms (uniform-6p, ...). Throws DataError otherwise.
PatternKind parse_pattern_kind(const std::string& name);

struct PatternConfig {
  PatternKind kind = PatternKind::NonUniform6;
  /// Cube edge for the uniform pattern.
  double cube_edge = 0.2;

  int count() const;
  bool trainable() const;
};

struct EncoderConfig {
  std::array<int, kScales> widths{16, 32, 64, 128, 128, 128};
  /// 3x3 conv+relu layers per stage; stage s > 0 starts with a 2x2 max pool.
  /// A stage with zero convs exposes the pooled map of the previous stage.
  std::array<int, kScales> convs_per_stage{2, 2, 2, 2, 2, 2};
  int global_dim = 128;
  int input_width = 137;
  int input_height = 137;

  static EncoderConfig mini();
  /// VGG-16 convolution stack (13 convs); the sixth map is pool5.
  static EncoderConfig full();

  int local_dim() const;
  void validate() const;
};

struct MlpConfig {
  /// Query lift shared by both SDF heads (last width is the point feature).
  std::vector<int> point_widths{32, 64, 128};
  /// Hidden widths of each SDF head before the scalar output.
  std::vector<int> head_widths{128, 64};
  /// Per-point lift inside the pattern generator.
  std::vector<int> generator_point_widths{32, 64, 128};
  /// Hidden widths of the generator after concatenation.
  std::vector<int> generator_head_widths{128, 64};

  static MlpConfig mini();
  static MlpConfig full();
  void validate() const;
};

struct ModelConfig {
  EncoderConfig encoder = EncoderConfig::mini();
  MlpConfig mlp = MlpConfig::mini();
  PatternConfig pattern;
  nn::LossConfig loss;
  std::uint64_t seed = 1;
  /// Gradients reach pattern offsets through the bilinear lookup position.
  bool pattern_coordinate_grad = true;
  /// Scale of the generator's output layer at initialization; 0 starts every
  /// pattern at its initialization points.
  double generator_output_init = 0.0;
  /// Scale of the two SDF heads' output layers at initialization.
  double sdf_output_init = 1.0;

  static ModelConfig mini();
  static ModelConfig full();
  void validate() const;
};

nlohmann::json model_config_to_json(const ModelConfig& cfg);
/// Missing keys keep the mini defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace psdf::model
