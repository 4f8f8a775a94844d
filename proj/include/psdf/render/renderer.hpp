#pragma once

#include "psdf/camera/camera.hpp"
#include "psdf/geometry/scene.hpp"
#include "psdf/render/image.hpp"

#include <optional>

namespace psdf::render {

using geometry::Vec3;

struct TraceOptions {
  int max_steps = 128;
  double eps = 1e-3;
  /// Step = factor * sdf; 1.0 is safe for exact (1-Lipschitz) fields.
  double step_factor = 1.0;
  /// Rays are marched only inside the sphere circumscribing the cube [-h, h]^3.
  double domain_half_extent = 1.0;
};

/// First point along the ray with |sdf| < eps, or nullopt after max_steps or
/// once the ray leaves the domain cube.
std::optional<Vec3> sphere_trace(const geometry::SdfScene& scene, const Vec3& origin, const Vec3& direction,
                                 const TraceOptions& options = {});

struct RenderOptions {
  TraceOptions trace;
  float background = 1.0f;
  /// Direction towards the light in camera coordinates (x right, y down,
  /// z forward). Normalized before use.
  Vec3 light_camera{-0.35, -0.55, -0.75};
  /// Central-difference step for shading normals.
  double normal_step = 1e-4;
};

struct RenderResult {
  Image image;
  /// 1 where the pixel ray hit the scene.
  std::vector<std::uint8_t> mask;
};

RenderResult render_with_mask(const geometry::SdfScene& scene, const camera::CameraPose& pose,
                              const RenderOptions& options = {});

/// Lambertian max(0, n.L) on hits, constant background elsewhere.
Image render(const geometry::SdfScene& scene, const camera::CameraPose& pose, const RenderOptions& options = {});

}  // namespace psdf::render
