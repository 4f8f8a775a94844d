#include "psdf/camera/camera.hpp"

#include "psdf/error.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>

namespace psdf::camera {

void CameraPose::validate() const {
  const Eigen::Matrix3d r = rotation();
  if (!transform.allFinite()) throw GeometryError("camera: non-finite transform");
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw GeometryError("camera: rotation block is not orthonormal");
  }
  if (std::abs(r.determinant() - 1.0) > 1e-9) throw GeometryError("camera: rotation determinant is not +1");
  if (transform.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) {
    throw GeometryError("camera: transform bottom row must be (0, 0, 0, 1)");
  }
  if (!(focal > 0.0)) throw GeometryError("camera: focal length must be positive");
  if (image_size[0] < 1 || image_size[1] < 1) throw GeometryError("camera: image size must be positive");
}

Vec3 world_to_camera(const CameraPose& pose, const Vec3& p) {
  return (pose.transform * p.homogeneous()).head<3>();
}

Vec2 project_unclamped(const CameraPose& pose, const Vec3& p) {
  const Vec3 c = world_to_camera(pose, p);
  if (!(c.z() > 0.0)) {
    throw GeometryError("camera: point is behind the camera (z = " + std::to_string(c.z()) + ")");
  }
  return {pose.focal * c.x() / c.z() + pose.principal.x(), pose.focal * c.y() / c.z() + pose.principal.y()};
}

Vec2 reset_to_image(const CameraPose& pose, const Vec2& pixel) {
  return {std::clamp(pixel.x(), 0.0, static_cast<double>(pose.image_size[0] - 1)),
          std::clamp(pixel.y(), 0.0, static_cast<double>(pose.image_size[1] - 1))};
}

Vec2 project(const CameraPose& pose, const Vec3& p) { return reset_to_image(pose, project_unclamped(pose, p)); }

Vec3 unproject(const CameraPose& pose, const Vec2& pixel, double depth) {
  const Vec3 c((pixel.x() - pose.principal.x()) / pose.focal * depth,
               (pixel.y() - pose.principal.y()) / pose.focal * depth, depth);
  return pose.rotation().transpose() * (c - pose.translation());
}

Vec3 pixel_ray(const CameraPose& pose, const Vec2& pixel) {
  const Vec3 c((pixel.x() - pose.principal.x()) / pose.focal, (pixel.y() - pose.principal.y()) / pose.focal, 1.0);
  return (pose.rotation().transpose() * c).normalized();
}

CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal,
                   std::array<int, 2> image_size) {
  if (!(focal > 0.0)) throw GeometryError("look_at: focal length must be positive");
  const Vec3 view = target - eye;
  if (view.norm() < 1e-12) throw GeometryError("look_at: eye and target coincide");
  const Vec3 z = view.normalized();
  const Vec3 down = -(up - up.dot(z) * z);
  if (down.norm() < 1e-9 * std::max(1.0, up.norm())) {
    throw GeometryError("look_at: up vector is parallel to the view direction");
  }
  const Vec3 y = down.normalized();
  const Vec3 x = y.cross(z);
  CameraPose pose;
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  pose.transform.setIdentity();
  pose.transform.topLeftCorner<3, 3>() = r;
  pose.transform.topRightCorner<3, 1>() = -r * eye;
  pose.focal = focal;
  pose.image_size = image_size;
  pose.principal = Vec2((image_size[0] - 1) / 2.0, (image_size[1] - 1) / 2.0);
  return pose;
}

nlohmann::json pose_to_json(const CameraPose& pose) {
  nlohmann::json t = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) t.push_back(pose.transform(r, c));
  }
  return {{"transform", t},
          {"focal", pose.focal},
          {"principal", {pose.principal.x(), pose.principal.y()}},
          {"size", {pose.image_size[0], pose.image_size[1]}}};
}

CameraPose pose_from_json(const nlohmann::json& j) {
  CameraPose pose;
  try {
    const auto t = j.at("transform").get<std::vector<double>>();
    if (t.size() != 16) throw DataError("camera: transform must have 16 entries");
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) pose.transform(r, c) = t[4 * r + c];
    }
    pose.focal = j.at("focal").get<double>();
    const auto pp = j.at("principal").get<std::array<double, 2>>();
    pose.principal = Vec2(pp[0], pp[1]);
    pose.image_size = j.at("size").get<std::array<int, 2>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("camera: ") + e.what());
  }
  pose.validate();
  return pose;
}

void save_pose(const CameraPose& pose, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write camera file " + path);
  out << pose_to_json(pose).dump(2) << '\n';
}

CameraPose load_pose(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read camera file " + path);
  try {
    return pose_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("camera " + path + ": " + e.what());
  }
}

}  // namespace psdf::camera
