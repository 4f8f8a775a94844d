#pragma once

#include "psdf/geometry/scene.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace psdf::pipeline {

/// Names accepted by make_template_scene, in default dataset order.
const std::vector<std::string>& scene_template_names();

/// A furniture-like CSG scene with seeded proportions, normalized to a max
/// half-extent of 0.9 about the origin. Throws DataError for unknown names.
geometry::SdfScene make_template_scene(const std::string& name, std::uint64_t seed);

}  // namespace psdf::pipeline
