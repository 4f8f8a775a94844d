#include "psdf/camera/camera.hpp"
#include "psdf/error.hpp"
#include "psdf/rng.hpp"

#include <Eigen/Geometry>
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace psdf;
using namespace psdf::camera;

namespace {

Vec3 random_vec(CounterRng& rng, double r) { return {rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)}; }

CameraPose random_pose(CounterRng& rng) {
  Vec3 eye = random_vec(rng, 3.0);
  if (eye.norm() < 2.5) eye = eye.normalized() * 2.5 + Vec3(0.1, 0.2, 0.3);
  return look_at(eye, random_vec(rng, 0.2), Vec3::UnitY(), rng.uniform(50, 200));
}

}  // namespace

TEST_CASE("world to camera applies the rigid transform") {
  CameraPose identity;
  CHECK(world_to_camera(identity, {0.2, 0.4, 2.0}) == Vec3(0.2, 0.4, 2.0));
  CameraPose shifted;
  shifted.transform(2, 3) = 3.0;
  CHECK(world_to_camera(shifted, Vec3::Zero()) == Vec3(0, 0, 3));

  // 90 degrees about y, then +2 along z, composed by explicit matrix products.
  Eigen::Matrix4d rot = Eigen::Matrix4d::Identity();
  rot.topLeftCorner<3, 3>() = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY()).toRotationMatrix();
  Eigen::Matrix4d trans = Eigen::Matrix4d::Identity();
  trans(2, 3) = 2.0;
  CameraPose pose;
  pose.transform = trans * rot;
  const Eigen::Vector4d expected = trans * (rot * Eigen::Vector4d(1, 0, 0, 1));
  const Vec3 got = world_to_camera(pose, {1, 0, 0});
  CHECK((got - expected.head<3>()).norm() < 1e-12);
  CHECK((got - Vec3(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("projection with the default intrinsics") {
  CameraPose pose;
  CHECK(pose.principal == Vec2(68, 68));
  const Vec2 p = project(pose, {0.2, 0.4, 2.0});
  CHECK(p.x() == doctest::Approx(75.0).epsilon(1e-15));
  CHECK(p.y() == doctest::Approx(82.0).epsilon(1e-15));
  CHECK(project(pose, {0, 0, 5}) == Vec2(68, 68));
}

TEST_CASE("out-of-bounds pixels reset to the border") {
  CameraPose pose;
  CHECK(reset_to_image(pose, {150.3, -5.0}) == Vec2(136, 0));
  CHECK(reset_to_image(pose, {-0.001, 136.5}) == Vec2(0, 136));
  CHECK(reset_to_image(pose, {12.25, 100.5}) == Vec2(12.25, 100.5));
  const Vec3 far = unproject(pose, {150.3, -5.0}, 2.0);
  CHECK(project(pose, far) == Vec2(136, 0));
  CHECK(project_unclamped(pose, far).x() == doctest::Approx(150.3).epsilon(1e-12));
}

TEST_CASE("reset is idempotent and leaves inside pixels alone") {
  CameraPose pose;
  CounterRng rng(2, 2);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 q(rng.uniform(-100, 250), rng.uniform(-100, 250));
    const Vec2 r = reset_to_image(pose, q);
    CHECK(reset_to_image(pose, r) == r);
    CHECK(r.x() >= 0.0);
    CHECK(r.x() <= 136.0);
    if (q.x() >= 0 && q.x() <= 136 && q.y() >= 0 && q.y() <= 136) CHECK(r == q);
  }
}

TEST_CASE("projection matches hand-composed matrix math") {
  CounterRng rng(3, 3);
  for (int i = 0; i < 200; ++i) {
    const CameraPose pose = random_pose(rng);
    const Vec3 p = random_vec(rng, 1.0);
    Eigen::Matrix<double, 3, 4> k_rt;
    Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
    k(0, 0) = k(1, 1) = pose.focal;
    k(0, 2) = pose.principal.x();
    k(1, 2) = pose.principal.y();
    k_rt = k * pose.transform.topRows<3>();
    const Eigen::Vector3d h = k_rt * p.homogeneous();
    const Vec2 raw = project_unclamped(pose, p);
    CHECK(std::abs(raw.x() - h.x() / h.z()) < 1e-9);
    CHECK(std::abs(raw.y() - h.y() / h.z()) < 1e-9);
  }
}

TEST_CASE("points behind the camera are an error") {
  CameraPose pose;
  CHECK_THROWS_AS(project(pose, {0, 0, -1}), GeometryError);
  CHECK_THROWS_AS(project(pose, {0.3, 0, 0}), GeometryError);
}

TEST_CASE("look_at builds an orthonormal pose") {
  const CameraPose pose = look_at({0, 0, -2}, Vec3::Zero(), Vec3::UnitY());
  CHECK((world_to_camera(pose, Vec3::Zero()) - Vec3(0, 0, 2)).norm() < 1e-12);
  CHECK_THROWS_AS(look_at({1, 1, 1}, {1, 1, 1}, Vec3::UnitY()), GeometryError);
  CHECK_THROWS_AS(look_at({0, 2, 0}, Vec3::Zero(), Vec3::UnitY()), GeometryError);

  CounterRng rng(4, 4);
  for (int i = 0; i < 200; ++i) {
    const CameraPose p = random_pose(rng);
    const Eigen::Matrix3d r = p.rotation();
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    CHECK(std::abs(r.determinant() - 1.0) < 1e-9);
    p.validate();
  }
}

TEST_CASE("world to camera preserves distances") {
  CounterRng rng(5, 5);
  for (int i = 0; i < 200; ++i) {
    const CameraPose pose = random_pose(rng);
    const Vec3 a = random_vec(rng, 2), b = random_vec(rng, 2);
    CHECK(std::abs((world_to_camera(pose, a) - world_to_camera(pose, b)).norm() - (a - b).norm()) < 1e-9);
  }
}

TEST_CASE("unproject then project recovers the pixel") {
  CounterRng rng(6, 6);
  for (int i = 0; i < 500; ++i) {
    const CameraPose pose = random_pose(rng);
    const Vec2 px(rng.uniform(0, 136), rng.uniform(0, 136));
    const double depth = rng.uniform(0.5, 6.0);
    CHECK((project_unclamped(pose, unproject(pose, px, depth)) - px).norm() < 1e-6);
    const Vec3 ray = pixel_ray(pose, px);
    CHECK(std::abs(ray.norm() - 1.0) < 1e-12);
    CHECK((project_unclamped(pose, pose.center() + 3.0 * ray) - px).norm() < 1e-6);
  }
}

TEST_CASE("invalid poses are rejected") {
  CameraPose pose;
  pose.transform(0, 0) = 2.0;
  CHECK_THROWS_AS(pose.validate(), GeometryError);
  CameraPose flat;
  flat.focal = 0.0;
  CHECK_THROWS_AS(flat.validate(), GeometryError);
}

TEST_CASE("camera json round trip") {
  CounterRng rng(7, 7);
  const CameraPose pose = random_pose(rng);
  const auto path = std::filesystem::temp_directory_path() / "psdf_camera_test.json";
  save_pose(pose, path.string());
  const CameraPose back = load_pose(path.string());
  CHECK(back.transform == pose.transform);
  CHECK(back.focal == pose.focal);
  CHECK(back.principal == pose.principal);
  CHECK(back.image_size == pose.image_size);
  const auto j = pose_to_json(pose);
  CHECK(j.at("transform").size() == 16);
  CHECK(j.at("size") == nlohmann::json::array({137, 137}));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(pose_from_json(nlohmann::json{{"focal", 70}}), DataError);
}
