#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <array>
#include <string>

namespace psdf::camera {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr int kImageSize = 137;
inline constexpr double kDefaultFocal = 70.0;

/// World-to-camera rigid transform plus pinhole intrinsics. Camera axes: x to
/// the right of the image, y down, z forward.
struct CameraPose {
  Eigen::Matrix4d transform = Eigen::Matrix4d::Identity();
  double focal = kDefaultFocal;
  Vec2 principal{(kImageSize - 1) / 2.0, (kImageSize - 1) / 2.0};
  std::array<int, 2> image_size{kImageSize, kImageSize};

  Eigen::Matrix3d rotation() const { return transform.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return transform.topRightCorner<3, 1>(); }
  /// Camera center in world coordinates.
  Vec3 center() const { return -rotation().transpose() * translation(); }

  /// Throws GeometryError unless the rotation block is orthonormal with
  /// det +1 (within 1e-9), the bottom row is (0,0,0,1) and focal > 0.
  void validate() const;
};

Vec3 world_to_camera(const CameraPose& pose, const Vec3& p);

/// Perspective projection without the image-bounds reset. Throws
/// GeometryError when the point is not in front of the camera.
Vec2 project_unclamped(const CameraPose& pose, const Vec3& p);

/// Clamps each coordinate independently into [0, size - 1].
Vec2 reset_to_image(const CameraPose& pose, const Vec2& pixel);

/// Projection followed by the out-of-bounds reset.
Vec2 project(const CameraPose& pose, const Vec3& p);

/// Point at camera depth `depth` whose projection is `pixel`.
Vec3 unproject(const CameraPose& pose, const Vec2& pixel, double depth);

/// Unit world-space direction of the ray through `pixel`.
Vec3 pixel_ray(const CameraPose& pose, const Vec2& pixel);

CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal = kDefaultFocal,
                   std::array<int, 2> image_size = {kImageSize, kImageSize});

nlohmann::json pose_to_json(const CameraPose& pose);
CameraPose pose_from_json(const nlohmann::json& j);
void save_pose(const CameraPose& pose, const std::string& path);
CameraPose load_pose(const std::string& path);

}  // namespace psdf::camera
