#include "psdf/model/config.hpp"

#include "psdf/error.hpp"

#include <cmath>

namespace psdf::model {

std::string pattern_kind_name(PatternKind kind) {
  switch (kind) {
    case PatternKind::Uniform6: return "uniform6";
    case PatternKind::NonUniform6: return "nonuniform6";
    case PatternKind::NonUniform3: return "nonuniform3";
    case PatternKind::Rigid3: return "rigid3";
    case PatternKind::None: return "none";
  }
  return "none";
}

PatternKind parse_pattern_kind(const std::string& name) {
  if (name == "uniform6" || name == "uniform-6p") return PatternKind::Uniform6;
  if (name == "nonuniform6" || name == "non-uniform-6p") return PatternKind::NonUniform6;
  if (name == "nonuniform3" || name == "non-uniform-3p") return PatternKind::NonUniform3;
  if (name == "rigid3" || name == "rigid-3p") return PatternKind::Rigid3;
  if (name == "none") return PatternKind::None;
  throw DataError("unknown pattern kind '" + name + "' (expected uniform6, nonuniform6, nonuniform3 or rigid3)");
}

int PatternConfig::count() const {
  switch (kind) {
    case PatternKind::Uniform6:
    case PatternKind::NonUniform6: return 6;
    case PatternKind::NonUniform3:
    case PatternKind::Rigid3: return 3;
    case PatternKind::None: return 0;
  }
  return 0;
}

bool PatternConfig::trainable() const { return kind != PatternKind::Rigid3 && kind != PatternKind::None; }

EncoderConfig EncoderConfig::mini() { return {}; }

EncoderConfig EncoderConfig::full() {
  EncoderConfig cfg;
  cfg.widths = {64, 128, 256, 512, 512, 512};
  cfg.convs_per_stage = {2, 2, 3, 3, 3, 0};
  cfg.global_dim = 1024;
  return cfg;
}

int EncoderConfig::local_dim() const {
  int total = 0;
  for (int w : widths) total += w;
  return total;
}

void EncoderConfig::validate() const {
  for (int s = 0; s < kScales; ++s) {
    if (widths[s] <= 0) throw DataError("encoder: widths must be positive");
    if (convs_per_stage[s] < 0) throw DataError("encoder: conv counts must be non-negative");
    if (convs_per_stage[s] == 0 && (s == 0 || widths[s] != widths[s - 1])) {
      throw DataError("encoder: a stage without convolutions must keep the previous width");
    }
  }
  if (global_dim <= 0) throw DataError("encoder: global_dim must be positive");
  if (input_width < 1 || input_height < 1) throw DataError("encoder: input size must be positive");
}

MlpConfig MlpConfig::mini() { return {}; }

MlpConfig MlpConfig::full() {
  MlpConfig cfg;
  cfg.point_widths = {64, 256, 512};
  cfg.head_widths = {512, 256};
  cfg.generator_point_widths = {64, 256, 512};
  cfg.generator_head_widths = {512, 256};
  return cfg;
}

void MlpConfig::validate() const {
  for (const auto* widths : {&point_widths, &head_widths, &generator_point_widths, &generator_head_widths}) {
    if (widths->empty()) throw DataError("mlp: width lists must not be empty");
    for (int w : *widths) {
      if (w <= 0) throw DataError("mlp: widths must be positive");
    }
  }
}

ModelConfig ModelConfig::mini() { return {}; }

ModelConfig ModelConfig::full() {
  ModelConfig cfg;
  cfg.encoder = EncoderConfig::full();
  cfg.mlp = MlpConfig::full();
  return cfg;
}

void ModelConfig::validate() const {
  encoder.validate();
  mlp.validate();
  loss.validate();
  if (!(pattern.cube_edge > 0.0)) throw DataError("pattern: cube edge must be positive");
  if (!std::isfinite(generator_output_init) || generator_output_init < 0.0 || !std::isfinite(sdf_output_init) ||
      sdf_output_init < 0.0) {
    throw DataError("model: output init scales must be finite and non-negative");
  }
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {
      {"encoder",
       {{"widths", cfg.encoder.widths},
        {"convs_per_stage", cfg.encoder.convs_per_stage},
        {"global_dim", cfg.encoder.global_dim},
        {"input_size", {cfg.encoder.input_width, cfg.encoder.input_height}}}},
      {"mlp",
       {{"point_widths", cfg.mlp.point_widths},
        {"head_widths", cfg.mlp.head_widths},
        {"generator_point_widths", cfg.mlp.generator_point_widths},
        {"generator_head_widths", cfg.mlp.generator_head_widths}}},
      {"pattern", {{"kind", pattern_kind_name(cfg.pattern.kind)}, {"cube_edge", cfg.pattern.cube_edge}}},
      {"loss", nn::loss_config_to_json(cfg.loss)},
      {"seed", cfg.seed},
      {"pattern_coordinate_grad", cfg.pattern_coordinate_grad},
      {"generator_output_init", cfg.generator_output_init},
      {"sdf_output_init", cfg.sdf_output_init},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  try {
    if (j.contains("preset")) {
      const auto preset = j.at("preset").get<std::string>();
      if (preset == "full") {
        cfg = ModelConfig::full();
      } else if (preset != "mini") {
        throw DataError("model config: unknown preset '" + preset + "'");
      }
    }
    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      if (e.contains("widths")) cfg.encoder.widths = e.at("widths").get<std::array<int, kScales>>();
      if (e.contains("convs_per_stage")) {
        cfg.encoder.convs_per_stage = e.at("convs_per_stage").get<std::array<int, kScales>>();
      }
      cfg.encoder.global_dim = e.value("global_dim", cfg.encoder.global_dim);
      if (e.contains("input_size")) {
        const auto size = e.at("input_size").get<std::array<int, 2>>();
        cfg.encoder.input_width = size[0];
        cfg.encoder.input_height = size[1];
      }
    }
    if (j.contains("mlp")) {
      const auto& m = j.at("mlp");
      cfg.mlp.point_widths = m.value("point_widths", cfg.mlp.point_widths);
      cfg.mlp.head_widths = m.value("head_widths", cfg.mlp.head_widths);
      cfg.mlp.generator_point_widths = m.value("generator_point_widths", cfg.mlp.generator_point_widths);
      cfg.mlp.generator_head_widths = m.value("generator_head_widths", cfg.mlp.generator_head_widths);
    }
    if (j.contains("pattern")) {
      const auto& p = j.at("pattern");
      if (p.contains("kind")) cfg.pattern.kind = parse_pattern_kind(p.at("kind").get<std::string>());
      cfg.pattern.cube_edge = p.value("cube_edge", cfg.pattern.cube_edge);
    }
    if (j.contains("loss")) cfg.loss = nn::loss_config_from_json(j.at("loss"));
    cfg.seed = j.value("seed", cfg.seed);
    cfg.pattern_coordinate_grad = j.value("pattern_coordinate_grad", cfg.pattern_coordinate_grad);
    cfg.generator_output_init = j.value("generator_output_init", cfg.generator_output_init);
    cfg.sdf_output_init = j.value("sdf_output_init", cfg.sdf_output_init);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace psdf::model
