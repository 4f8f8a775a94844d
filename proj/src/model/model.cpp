#include "psdf/model/model.hpp"

#include "psdf/error.hpp"
#include "psdf/nn/ops.hpp"
#include "psdf/rng.hpp"

#include <algorithm>
#include <cmath>

namespace psdf::model {

template <typename T>
Var project_points(nn::Tape<T>& tape, Var points, const camera::CameraPose& pose) {
  const auto& shape = tape.shape(points);
  if (shape.size() != 2 || shape[1] != 3) {
    throw ShapeError("project_points: expected [M, 3], got " + nn::shape_str(shape));
  }
  const std::int64_t m = shape[0];
  const Eigen::Matrix3d r = pose.rotation();
  const Vec3 t = pose.translation();
  const double w_max = pose.image_size[0] - 1;
  const double h_max = pose.image_size[1] - 1;

  nn::Tensor<T> out({m, 2});
  // Per point: d(u)/dp and d(v)/dp, zeroed when the reset is active.
  auto jac = std::make_shared<std::vector<double>>(static_cast<std::size_t>(m) * 6, 0.0);
  const auto& pv = tape.value(points);
  for (std::int64_t i = 0; i < m; ++i) {
    const Vec3 p(pv[3 * i], pv[3 * i + 1], pv[3 * i + 2]);
    const Vec3 c = r * p + t;
    if (!(c.z() > 0.0)) throw GeometryError("project_points: point is not in front of the camera");
    const double inv_z = 1.0 / c.z();
    const double u = pose.focal * c.x() * inv_z + pose.principal.x();
    const double v = pose.focal * c.y() * inv_z + pose.principal.y();
    out[2 * i] = static_cast<T>(std::clamp(u, 0.0, w_max));
    out[2 * i + 1] = static_cast<T>(std::clamp(v, 0.0, h_max));
    double* j = jac->data() + 6 * i;
    if (u >= 0.0 && u <= w_max) {
      const Eigen::RowVector3d du = pose.focal * inv_z * (r.row(0) - c.x() * inv_z * r.row(2));
      for (int k = 0; k < 3; ++k) j[k] = du[k];
    }
    if (v >= 0.0 && v <= h_max) {
      const Eigen::RowVector3d dv = pose.focal * inv_z * (r.row(1) - c.y() * inv_z * r.row(2));
      for (int k = 0; k < 3; ++k) j[3 + k] = dv[k];
    }
  }
  return tape.record(std::move(out), {points}, [points, m, jac](nn::Tape<T>& t, Var o) {
    const auto& go = t.grad_slot(o);
    auto& gp = t.grad_slot(points);
    for (std::int64_t i = 0; i < m; ++i) {
      const double* j = jac->data() + 6 * i;
      for (int k = 0; k < 3; ++k) {
        gp[3 * i + k] += static_cast<T>(go[2 * i] * j[k] + go[2 * i + 1] * j[3 + k]);
      }
    }
  });
}

template <typename T>
nn::Tensor<T> image_to_tensor(const render::Image& image) {
  nn::Tensor<T> out({3, image.height, image.width});
  const std::int64_t plane = static_cast<std::int64_t>(image.width) * image.height;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) out[c * plane + y * image.width + x] = static_cast<T>(image.at(x, y, c));
    }
  }
  return out;
}

template <typename T>
typename SdfModel<T>::Dense SdfModel<T>::add_dense(const std::string& name, int in, int out, double init_gain) {
  Dense d{store_.add(name + ".weight", {out, in}), store_.add(name + ".bias", {out})};
  CounterRng rng(cfg_.seed, d.weight);
  const double bound = init_gain * std::sqrt(6.0 / in);
  for (auto& w : store_[d.weight].value.values()) w = static_cast<T>(rng.uniform(-bound, bound));
  return d;
}

template <typename T>
SdfModel<T>::SdfModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto& enc = cfg_.encoder;
  int channels = 3;
  for (int s = 0; s < kScales; ++s) {
    for (int c = 0; c < enc.convs_per_stage[s]; ++c) {
      const std::string name = "encoder.stage" + std::to_string(s + 1) + ".conv" + std::to_string(c + 1);
      Conv conv{store_.add(name + ".weight", {enc.widths[s], channels, 3, 3}), store_.add(name + ".bias", {enc.widths[s]}),
                s};
      CounterRng rng(cfg_.seed, conv.weight);
      const double bound = std::sqrt(6.0 / (channels * 9));
      for (auto& w : store_[conv.weight].value.values()) w = static_cast<T>(rng.uniform(-bound, bound));
      convs_.push_back(conv);
      channels = enc.widths[s];
    }
  }
  global_ = add_dense("encoder.global", channels, enc.global_dim, 1.0);

  const int n = cfg_.pattern.count();
  const auto& mlp = cfg_.mlp;
  if (cfg_.pattern.trainable()) {
    int in = 3;
    for (std::size_t i = 0; i < mlp.generator_point_widths.size(); ++i) {
      generator_point_.push_back(add_dense("generator.point" + std::to_string(i + 1), in, mlp.generator_point_widths[i], 1.0));
      in = mlp.generator_point_widths[i];
    }
    in *= 1 + n;
    for (std::size_t i = 0; i < mlp.generator_head_widths.size(); ++i) {
      generator_head_.push_back(add_dense("generator.head" + std::to_string(i + 1), in, mlp.generator_head_widths[i], 1.0));
      in = mlp.generator_head_widths[i];
    }
    generator_head_.push_back(
        add_dense("generator.out", in, 3 * n, cfg_.generator_output_init / std::sqrt(2.0)));
  }

  for (int s = 0; s < kScales; ++s) {
    aggregate_[s] = add_dense("aggregate.scale" + std::to_string(s + 1), (1 + n) * enc.widths[s], enc.widths[s], 1.0);
  }

  int in = 3;
  for (std::size_t i = 0; i < mlp.point_widths.size(); ++i) {
    point_lift_.push_back(add_dense("sdf.point" + std::to_string(i + 1), in, mlp.point_widths[i], 1.0));
    in = mlp.point_widths[i];
  }
  const int point_dim = in;
  auto build_head = [&](const std::string& prefix, int feature_dim, std::vector<Dense>& layers) {
    int width = feature_dim + point_dim;
    for (std::size_t i = 0; i < mlp.head_widths.size(); ++i) {
      layers.push_back(add_dense(prefix + std::to_string(i + 1), width, mlp.head_widths[i], 1.0));
      width = mlp.head_widths[i];
    }
    layers.push_back(add_dense(prefix + "_out", width, 1, cfg_.sdf_output_init / std::sqrt(2.0)));
  };
  build_head("sdf.global_head", enc.global_dim, global_head_);
  build_head("sdf.local_head", enc.local_dim(), local_head_);
}

template <typename T>
Var SdfModel<T>::apply(Graph<T>& g, const Dense& layer, Var x) const {
  return nn::linear(g.tape, x, g.params.at(layer.weight), g.params.at(layer.bias));
}

template <typename T>
Var SdfModel<T>::mlp(Graph<T>& g, const std::vector<Dense>& layers, Var x, bool relu_last) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = apply(g, layers[i], x);
    if (relu_last || i + 1 < layers.size()) x = nn::relu(g.tape, x);
  }
  return x;
}

template <typename T>
FeaturePyramid SdfModel<T>::encode(Graph<T>& g, const render::Image& image) const {
  if (image.width != cfg_.encoder.input_width || image.height != cfg_.encoder.input_height) {
    throw ShapeError("encode: image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                     ", model expects " + std::to_string(cfg_.encoder.input_width) + "x" +
                     std::to_string(cfg_.encoder.input_height));
  }
  return encode(g, g.tape.constant(image_to_tensor<T>(image)));
}

template <typename T>
FeaturePyramid SdfModel<T>::encode(Graph<T>& g, Var image) const {
  const nn::Shape expected{3, cfg_.encoder.input_height, cfg_.encoder.input_width};
  if (g.tape.shape(image) != expected) {
    throw ShapeError("encode: image tensor " + nn::shape_str(g.tape.shape(image)) + ", expected " +
                     nn::shape_str(expected));
  }
  FeaturePyramid pyramid;
  Var x = image;
  std::size_t next = 0;
  for (int s = 0; s < kScales; ++s) {
    if (s > 0) x = nn::max_pool2d(g.tape, x);
    for (; next < convs_.size() && convs_[next].stage == s; ++next) {
      x = nn::relu(g.tape, nn::conv2d(g.tape, x, g.params.at(convs_[next].weight), g.params.at(convs_[next].bias)));
    }
    pyramid.maps[s] = nn::chw_to_hwc(g.tape, x);
  }
  pyramid.global = nn::relu(g.tape, apply(g, global_, nn::global_avg_pool(g.tape, x)));
  return pyramid;
}

template <typename T>
Var SdfModel<T>::init_points(Graph<T>& g, std::span<const Vec3> queries) const {
  const int n = pattern_count();
  nn::Tensor<T> out({static_cast<std::int64_t>(queries.size()), 3 * n});
  for (std::size_t b = 0; b < queries.size(); ++b) {
    const auto pts = init_pattern(queries[b], cfg_.pattern);
    for (int k = 0; k < n; ++k) {
      for (int a = 0; a < 3; ++a) out[static_cast<std::int64_t>(b) * 3 * n + 3 * k + a] = static_cast<T>(pts[k][a]);
    }
  }
  return g.tape.constant(std::move(out));
}

template <typename T>
PatternOutput SdfModel<T>::generate_pattern(Graph<T>& g, Var queries, Var init) const {
  const int n = pattern_count();
  const std::int64_t b = g.tape.shape(queries).at(0);
  if (g.tape.shape(init) != nn::Shape{b, 3 * n}) {
    throw ShapeError("generate_pattern: init " + nn::shape_str(g.tape.shape(init)) + " does not match " +
                     std::to_string(b) + " queries with " + std::to_string(n) + " pattern points");
  }
  if (!cfg_.pattern.trainable()) {
    return {init, g.tape.constant(nn::Tensor<T>({b, 3 * n}))};
  }
  const std::array<Var, 2> parts{queries, init};
  Var x = nn::reshape(g.tape, nn::concat<T>(g.tape, parts, 1), {b * (1 + n), 3});
  x = mlp(g, generator_point_, x, true);
  x = nn::reshape(g.tape, x, {b, (1 + n) * g.tape.shape(x)[1]});
  const Var offsets = nn::tanh(g.tape, mlp(g, generator_head_, x, false));
  return {nn::add(g.tape, init, offsets), offsets};
}

template <typename T>
LocalFeatures SdfModel<T>::gather_local(Graph<T>& g, const FeaturePyramid& pyramid, const camera::CameraPose& pose,
                                        Var points) const {
  const Var pixels = project_points(g.tape, points, pose);
  nn::BilinearOptions opts;
  opts.image_width = pose.image_size[0];
  opts.image_height = pose.image_size[1];
  opts.coordinate_grad = cfg_.pattern_coordinate_grad;
  LocalFeatures out;
  for (int s = 0; s < kScales; ++s) out.scales[s] = nn::bilinear_sample(g.tape, pyramid.maps[s], pixels, opts);
  return out;
}

template <typename T>
Var SdfModel<T>::aggregate(Graph<T>& g, const LocalFeatures& features) const {
  const int group = 1 + pattern_count();
  std::array<Var, kScales> fused;
  for (int s = 0; s < kScales; ++s) {
    const auto& shape = g.tape.shape(features.scales[s]);
    if (shape.size() != 2 || shape[0] % group != 0 || shape[1] != cfg_.encoder.widths[s]) {
      throw ShapeError("aggregate: scale " + std::to_string(s + 1) + " features " + nn::shape_str(shape) +
                       " do not match " + std::to_string(group) + " points of width " +
                       std::to_string(cfg_.encoder.widths[s]));
    }
    const Var grouped = nn::reshape(g.tape, features.scales[s], {shape[0] / group, group * shape[1]});
    fused[s] = nn::relu(g.tape, apply(g, aggregate_[s], grouped));
  }
  return nn::concat<T>(g.tape, fused, 1);
}

template <typename T>
SdfHeads SdfModel<T>::predict_sdf(Graph<T>& g, Var queries, Var fused, Var global) const {
  const std::int64_t b = g.tape.shape(queries).at(0);
  const Var point = mlp(g, point_lift_, queries, true);
  const std::array<Var, 2> global_in{nn::broadcast_rows(g.tape, global, b), point};
  const std::array<Var, 2> local_in{fused, point};
  SdfHeads heads;
  heads.global_head = mlp(g, global_head_, nn::concat<T>(g.tape, global_in, 1), false);
  heads.local_head = mlp(g, local_head_, nn::concat<T>(g.tape, local_in, 1), false);
  heads.sdf = nn::add(g.tape, heads.global_head, heads.local_head);
  return heads;
}

template <typename T>
static Var query_tensor(nn::Tape<T>& tape, std::span<const Vec3> queries) {
  nn::Tensor<T> q({static_cast<std::int64_t>(queries.size()), 3});
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (int a = 0; a < 3; ++a) q[static_cast<std::int64_t>(i) * 3 + a] = static_cast<T>(queries[i][a]);
  }
  return tape.constant(std::move(q));
}

template <typename T>
ForwardResult SdfModel<T>::forward(Graph<T>& g, const FeaturePyramid& pyramid, const camera::CameraPose& pose,
                                   std::span<const Vec3> queries) const {
  const int n = pattern_count();
  const auto b = static_cast<std::int64_t>(queries.size());
  const Var q = query_tensor(g.tape, queries);
  ForwardResult result;
  result.pattern = generate_pattern(g, q, init_points(g, queries));
  Var all = q;
  if (n > 0) {
    const std::array<Var, 2> parts{q, result.pattern.points};
    all = nn::reshape(g.tape, nn::concat<T>(g.tape, parts, 1), {b * (1 + n), 3});
  }
  const Var fused = aggregate(g, gather_local(g, pyramid, pose, all));
  result.heads = predict_sdf(g, q, fused, pyramid.global);
  return result;
}

template <typename T>
std::vector<T> SdfModel<T>::predict(const render::Image& image, const camera::CameraPose& pose,
                                    std::span<const Vec3> queries, std::size_t chunk) const {
  nn::Tape<T> tape;
  nn::NoGradGuard<T> guard(tape);
  Graph<T> g = bind(tape);
  const FeaturePyramid pyramid = encode(g, image);
  const std::size_t mark = tape.mark();
  std::vector<T> out;
  out.reserve(queries.size());
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t start = 0; start < queries.size(); start += chunk) {
    const auto part = queries.subspan(start, std::min(chunk, queries.size() - start));
    const auto result = forward(g, pyramid, pose, part);
    const auto values = tape.value(result.heads.sdf).span();
    out.insert(out.end(), values.begin(), values.end());
    tape.rewind(mark);
  }
  return out;
}

template <typename T>
std::vector<Vec3> SdfModel<T>::pattern_offsets(std::span<const Vec3> queries, std::size_t chunk) const {
  const int n = pattern_count();
  nn::Tape<T> tape;
  nn::NoGradGuard<T> guard(tape);
  Graph<T> g = bind(tape);
  const std::size_t mark = tape.mark();
  std::vector<Vec3> out;
  out.reserve(queries.size() * n);
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t start = 0; start < queries.size(); start += chunk) {
    const auto part = queries.subspan(start, std::min(chunk, queries.size() - start));
    const auto pattern = generate_pattern(g, query_tensor(tape, part), init_points(g, part));
    const auto& values = tape.value(pattern.offsets);
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(part.size()) * n; ++i) {
      out.emplace_back(values[3 * i], values[3 * i + 1], values[3 * i + 2]);
    }
    tape.rewind(mark);
  }
  return out;
}

nn::GradCheckReport check_model_gradients(PatternKind kind, std::uint64_t seed, std::size_t max_entries_per_input) {
  ModelConfig cfg = ModelConfig::mini();
  cfg.encoder.input_width = 8;
  cfg.encoder.input_height = 8;
  cfg.pattern.kind = kind;
  cfg.seed = seed;
  cfg.generator_output_init = 1.0;
  const SdfModel<double> model(cfg);

  CounterRng rng(seed, 0x6d6f64656c);
  render::Image image(8, 8);
  for (auto& v : image.data) v = static_cast<float>(rng.uniform());
  camera::CameraPose pose = camera::look_at({0.6, -0.8, 3.5}, {0, 0, 0}, {0, 1, 0}, 6.0, {8, 8});
  std::vector<Vec3> queries;
  for (int i = 0; i < 3; ++i) queries.emplace_back(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));

  std::vector<nn::Tensor<double>> inputs;
  for (const auto& p : model.parameters()) inputs.push_back(p.value);
  inputs.push_back(image_to_tensor<double>(image));

  auto builder = [&](nn::Tape<double>& tape, const std::vector<Var>& leaves) {
    Graph<double> g{tape, std::vector<Var>(leaves.begin(), leaves.end() - 1)};
    const FeaturePyramid pyramid = model.encode(g, leaves.back());
    return model.forward(g, pyramid, pose, queries).heads.sdf;
  };
  nn::GradCheckOptions opts;
  opts.seed = seed;
  opts.floor = 1e-5;
  opts.max_entries_per_input = max_entries_per_input;
  return nn::check_gradients("model/" + pattern_kind_name(kind), builder, std::move(inputs), opts);
}

#define PSDF_INSTANTIATE_MODEL(T)                                                              \
  template Var project_points<T>(nn::Tape<T>&, Var, const camera::CameraPose&);                \
  template nn::Tensor<T> image_to_tensor<T>(const render::Image&);                             \
  template class SdfModel<T>;

PSDF_INSTANTIATE_MODEL(float)
PSDF_INSTANTIATE_MODEL(double)

}  // namespace psdf::model
