#pragma once

#include "psdf/model/config.hpp"

#include <Eigen/Core>

#include <vector>

namespace psdf::model {

using Vec3 = Eigen::Vector3d;

/// Initial pattern points around query `p`, in generator output order.
///
/// uniform6: face centers of the axis-aligned cube of edge l centered at p,
/// ordered +z, +x, +y, -z, -x, -y. nonuniform6: reflections (x,y,-z),
/// (-x,y,z), (x,-y,z), (-x,-y,z), (x,-y,-z), (-x,y,-z); nonuniform3 keeps the
/// first three. rigid3: (x,y,-z), (-x,y,z), (-x,y,-z).
std::vector<Vec3> init_pattern(const Vec3& p, const PatternConfig& cfg);

}  // namespace psdf::model
