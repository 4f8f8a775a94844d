#include "psdf/render/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psdf::render {
namespace {

// Parametric interval of the ray inside the sphere circumscribing [-h, h]^3.
bool clip_to_bounds(const Vec3& origin, const Vec3& dir, double h, double& t_enter, double& t_exit) {
  const double a = dir.squaredNorm();
  const double b = origin.dot(dir);
  const double disc = b * b - a * (origin.squaredNorm() - 3.0 * h * h);
  if (a == 0.0 || disc < 0.0) return false;
  const double root = std::sqrt(disc);
  t_enter = std::max(0.0, (-b - root) / a);
  t_exit = (-b + root) / a;
  return t_enter <= t_exit;
}

}  // namespace

std::optional<Vec3> sphere_trace(const geometry::SdfScene& scene, const Vec3& origin, const Vec3& direction,
                                 const TraceOptions& options) {
  double t = 0.0;
  double t_exit = 0.0;
  if (scene.empty() || !clip_to_bounds(origin, direction, options.domain_half_extent, t, t_exit)) {
    return std::nullopt;
  }
  for (int step = 0; step < options.max_steps; ++step) {
    const Vec3 p = origin + t * direction;
    const double d = scene.eval(p);
    if (std::abs(d) < options.eps) return p;
    t += options.step_factor * d;
    if (t > t_exit + options.eps) return std::nullopt;
  }
  return std::nullopt;
}

RenderResult render_with_mask(const geometry::SdfScene& scene, const camera::CameraPose& pose,
                              const RenderOptions& options) {
  pose.validate();
  const int w = pose.image_size[0];
  const int h = pose.image_size[1];
  RenderResult out{Image(w, h, options.background),
                   std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
  const Vec3 light = (pose.rotation().transpose() * options.light_camera.normalized()).normalized();
  const Vec3 eye = pose.center();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 dir = camera::pixel_ray(pose, camera::Vec2(x, y));
      const auto hit = sphere_trace(scene, eye, dir, options.trace);
      if (!hit) continue;
      const Vec3 g = scene.gradient(*hit, options.normal_step);
      const double gn = g.norm();
      const double shade = gn > 0.0 ? std::max(0.0, g.dot(light) / gn) : 0.0;
      for (int c = 0; c < Image::kChannels; ++c) out.image.at(x, y, c) = static_cast<float>(shade);
      out.mask[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return out;
}

Image render(const geometry::SdfScene& scene, const camera::CameraPose& pose, const RenderOptions& options) {
  return render_with_mask(scene, pose, options).image;
}

}  // namespace psdf::render
