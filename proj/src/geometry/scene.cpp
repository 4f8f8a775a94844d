#include "psdf/geometry/scene.hpp"

#include "psdf/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

namespace psdf::geometry {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sphere_sdf(const Sphere& s, const Vec3& p) { return (p - s.center).norm() - s.radius; }

double box_sdf(const Box& b, const Vec3& p) {
  const Vec3 q = (p - b.center).cwiseAbs() - b.half_extents;
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

double capsule_sdf(const Capsule& c, const Vec3& p) {
  const Vec3 pa = p - c.a;
  const Vec3 ba = c.b - c.a;
  const double len2 = ba.squaredNorm();
  const double h = len2 > 0.0 ? std::clamp(pa.dot(ba) / len2, 0.0, 1.0) : 0.0;
  return (pa - ba * h).norm() - c.radius;
}

double node_sdf(const SceneNode& node, const Vec3& p) {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Sphere>) {
          return sphere_sdf(s, p);
        } else if constexpr (std::is_same_v<S, Box>) {
          return box_sdf(s, p);
        } else if constexpr (std::is_same_v<S, Capsule>) {
          return capsule_sdf(s, p);
        } else {
          if (s.children.empty()) return kInf;
          double d = node_sdf(s.children.front(), p);
          for (std::size_t i = 1; i < s.children.size(); ++i) {
            const double c = node_sdf(s.children[i], p);
            switch (s.op) {
              case CsgOp::Union: d = std::min(d, c); break;
              case CsgOp::Intersection: d = std::max(d, c); break;
              case CsgOp::Subtraction: d = std::max(d, -c); break;
            }
          }
          return d;
        }
      },
      node.shape);
}

Aabb node_bounds(const SceneNode& node) {
  return std::visit(
      [&](const auto& s) -> Aabb {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Sphere>) {
          return {s.center.array() - s.radius, s.center.array() + s.radius};
        } else if constexpr (std::is_same_v<S, Box>) {
          return {s.center - s.half_extents, s.center + s.half_extents};
        } else if constexpr (std::is_same_v<S, Capsule>) {
          return {s.a.cwiseMin(s.b).array() - s.radius, s.a.cwiseMax(s.b).array() + s.radius};
        } else {
          if (s.children.empty()) return {};
          Aabb box = node_bounds(s.children.front());
          if (s.op == CsgOp::Subtraction) return box;
          for (std::size_t i = 1; i < s.children.size(); ++i) {
            const Aabb c = node_bounds(s.children[i]);
            if (s.op == CsgOp::Union) {
              box.lo = box.lo.cwiseMin(c.lo);
              box.hi = box.hi.cwiseMax(c.hi);
            } else {
              box.lo = box.lo.cwiseMax(c.lo);
              box.hi = box.hi.cwiseMin(c.hi);
            }
          }
          return box;
        }
      },
      node.shape);
}

template <typename PointMap, typename LengthMap, typename VectorMap>
SceneNode map_node(const SceneNode& node, const PointMap& point, const LengthMap& length,
                   const VectorMap& vector) {
  return std::visit(
      [&](const auto& s) -> SceneNode {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Sphere>) {
          return {Sphere{point(s.center), length(s.radius)}};
        } else if constexpr (std::is_same_v<S, Box>) {
          return {Box{point(s.center), vector(s.half_extents)}};
        } else if constexpr (std::is_same_v<S, Capsule>) {
          return {Capsule{point(s.a), point(s.b), length(s.radius)}};
        } else {
          Csg out{s.op, {}};
          out.children.reserve(s.children.size());
          for (const auto& c : s.children) out.children.push_back(map_node(c, point, length, vector));
          return {std::move(out)};
        }
      },
      node.shape);
}

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 json_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("scene: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json node_json(const SceneNode& node) {
  return std::visit(
      [&](const auto& s) -> nlohmann::json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Sphere>) {
          return {{"type", "sphere"}, {"center", vec_json(s.center)}, {"radius", s.radius}};
        } else if constexpr (std::is_same_v<S, Box>) {
          return {{"type", "box"}, {"center", vec_json(s.center)}, {"half_extents", vec_json(s.half_extents)}};
        } else if constexpr (std::is_same_v<S, Capsule>) {
          return {{"type", "capsule"}, {"a", vec_json(s.a)}, {"b", vec_json(s.b)}, {"radius", s.radius}};
        } else {
          nlohmann::json children = nlohmann::json::array();
          for (const auto& c : s.children) children.push_back(node_json(c));
          const char* op = s.op == CsgOp::Union          ? "union"
                           : s.op == CsgOp::Intersection ? "intersection"
                                                         : "subtraction";
          return {{"type", op}, {"children", children}};
        }
      },
      node.shape);
}

SceneNode json_node(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "sphere") return make_sphere(json_vec(j.at("center")), j.at("radius").get<double>());
  if (type == "box") return make_box(json_vec(j.at("center")), json_vec(j.at("half_extents")));
  if (type == "capsule") {
    return make_capsule(json_vec(j.at("a")), json_vec(j.at("b")), j.at("radius").get<double>());
  }
  Csg csg;
  if (type == "union") {
    csg.op = CsgOp::Union;
  } else if (type == "intersection") {
    csg.op = CsgOp::Intersection;
  } else if (type == "subtraction") {
    csg.op = CsgOp::Subtraction;
  } else {
    throw DataError("scene: unknown node type '" + type + "'");
  }
  for (const auto& c : j.at("children")) csg.children.push_back(json_node(c));
  if (csg.children.empty()) throw DataError("scene: combinator '" + type + "' has no children");
  return {std::move(csg)};
}

}  // namespace

double SdfScene::eval(const Vec3& p) const { return root_ ? node_sdf(*root_, p) : kInf; }

Vec3 SdfScene::gradient(const Vec3& p, double h) const {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 d = Vec3::Zero();
    d[a] = h;
    g[a] = (eval(p + d) - eval(p - d)) / (2.0 * h);
  }
  return g;
}

Aabb SdfScene::bounds() const { return root_ ? node_bounds(*root_) : Aabb{}; }

SdfScene SdfScene::transformed(const Vec3& shift, double scale) const {
  if (!root_) return {};
  return SdfScene(map_node(
      *root_, [&](const Vec3& x) -> Vec3 { return scale * (x - shift); },
      [&](double r) { return scale * r; }, [&](const Vec3& v) -> Vec3 { return scale * v; }));
}

SdfScene SdfScene::rotated(const Eigen::Matrix3d& rotation) const {
  if (!root_) return {};
  bool has_box = false;
  std::function<void(const SceneNode&)> scan = [&](const SceneNode& n) {
    if (std::holds_alternative<Box>(n.shape)) has_box = true;
    if (const auto* c = std::get_if<Csg>(&n.shape)) {
      for (const auto& ch : c->children) scan(ch);
    }
  };
  scan(*root_);
  if (has_box) throw GeometryError("rotated: boxes are axis-aligned and cannot be rotated");
  return SdfScene(map_node(
      *root_, [&](const Vec3& x) -> Vec3 { return rotation * x; }, [](double r) { return r; },
      [](const Vec3& v) -> Vec3 { return v; }));
}

double eval_sdf(const SdfScene& scene, const Vec3& p) { return scene.eval(p); }

SdfScene normalize_scene(const SdfScene& scene, double target_extent) {
  const Aabb box = scene.bounds();
  if (scene.empty() || box.empty() || !box.lo.allFinite() || !box.hi.allFinite()) {
    throw GeometryError("normalize_scene: scene has no finite bounds");
  }
  const double extent = box.half_extents().maxCoeff();
  if (!(extent > 0.0)) throw GeometryError("normalize_scene: scene has zero extent");
  return scene.transformed(box.center(), target_extent / extent);
}

SceneNode make_sphere(const Vec3& center, double radius) { return {Sphere{center, radius}}; }
SceneNode make_box(const Vec3& center, const Vec3& half_extents) { return {Box{center, half_extents}}; }
SceneNode make_capsule(const Vec3& a, const Vec3& b, double radius) { return {Capsule{a, b, radius}}; }
SceneNode make_union(std::vector<SceneNode> children) { return {Csg{CsgOp::Union, std::move(children)}}; }
SceneNode make_intersection(std::vector<SceneNode> children) {
  return {Csg{CsgOp::Intersection, std::move(children)}};
}
SceneNode make_subtraction(SceneNode base, std::vector<SceneNode> cut) {
  Csg csg{CsgOp::Subtraction, {}};
  csg.children.push_back(std::move(base));
  for (auto& c : cut) csg.children.push_back(std::move(c));
  return {std::move(csg)};
}

nlohmann::json scene_to_json(const SdfScene& scene) {
  nlohmann::json j;
  j["version"] = 1;
  j["root"] = scene.root() ? node_json(*scene.root()) : nlohmann::json(nullptr);
  return j;
}

SdfScene scene_from_json(const nlohmann::json& j) {
  try {
    const auto& root = j.at("root");
    if (root.is_null()) return {};
    return SdfScene(json_node(root));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scene: ") + e.what());
  }
}

void save_scene(const SdfScene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scene file " + path);
  out << scene_to_json(scene).dump(2) << '\n';
}

SdfScene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read scene file " + path);
  try {
    return scene_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("scene " + path + ": " + e.what());
  }
}

}  // namespace psdf::geometry
