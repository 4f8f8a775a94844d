#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <optional>
#include <variant>
#include <vector>

namespace psdf::geometry {

using Vec3 = Eigen::Vector3d;

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.5;
};

struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Constant(0.5);
};

struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.1;
};

enum class CsgOp { Union, Intersection, Subtraction };

struct SceneNode;

/// Union/intersection take any number of children; subtraction removes
/// children[1..] from children[0].
struct Csg {
  CsgOp op = CsgOp::Union;
  std::vector<SceneNode> children;
};

struct SceneNode {
  std::variant<Sphere, Box, Capsule, Csg> shape;
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (hi.array() < lo.array()).any(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 half_extents() const { return 0.5 * (hi - lo); }
};

/// A CSG tree of analytic primitives. An empty scene (no root) is the
/// field +inf everywhere.
class SdfScene {
 public:
  SdfScene() = default;
  explicit SdfScene(SceneNode root) : root_(std::move(root)) {}

  bool empty() const { return !root_.has_value(); }
  const std::optional<SceneNode>& root() const { return root_; }

  /// Signed distance for primitives; min/max bounds for combinators.
  double eval(const Vec3& p) const;
  Vec3 gradient(const Vec3& p, double h = 1e-5) const;
  Aabb bounds() const;

  /// Returns the scene mapped by x -> scale * (x - shift).
  SdfScene transformed(const Vec3& shift, double scale) const;
  /// Returns the scene rotated about the origin by `rotation`.
  SdfScene rotated(const Eigen::Matrix3d& rotation) const;

 private:
  std::optional<SceneNode> root_;
};

double eval_sdf(const SdfScene& scene, const Vec3& p);

inline constexpr double kDefaultNormalizedExtent = 0.9;

/// Centers the bounding box at the origin and scales the largest half-extent
/// to `target_extent`. Throws GeometryError on unbounded or zero-extent scenes.
SdfScene normalize_scene(const SdfScene& scene, double target_extent = kDefaultNormalizedExtent);

SceneNode make_sphere(const Vec3& center, double radius);
SceneNode make_box(const Vec3& center, const Vec3& half_extents);
SceneNode make_capsule(const Vec3& a, const Vec3& b, double radius);
SceneNode make_union(std::vector<SceneNode> children);
SceneNode make_intersection(std::vector<SceneNode> children);
SceneNode make_subtraction(SceneNode base, std::vector<SceneNode> cut);

nlohmann::json scene_to_json(const SdfScene& scene);
SdfScene scene_from_json(const nlohmann::json& j);
void save_scene(const SdfScene& scene, const std::string& path);
SdfScene load_scene(const std::string& path);

}  // namespace psdf::geometry
