#include "psdf/model/pattern.hpp"

namespace psdf::model {

std::vector<Vec3> init_pattern(const Vec3& p, const PatternConfig& cfg) {
  const double x = p.x(), y = p.y(), z = p.z();
  switch (cfg.kind) {
    case PatternKind::Uniform6: {
      const double h = cfg.cube_edge / 2.0;
      return {{x, y, z + h}, {x + h, y, z}, {x, y + h, z}, {x, y, z - h}, {x - h, y, z}, {x, y - h, z}};
    }
    case PatternKind::NonUniform6:
      return {{x, y, -z}, {-x, y, z}, {x, -y, z}, {-x, -y, z}, {x, -y, -z}, {-x, y, -z}};
    case PatternKind::NonUniform3:
      return {{x, y, -z}, {-x, y, z}, {x, -y, z}};
    case PatternKind::Rigid3:
      return {{x, y, -z}, {-x, y, z}, {-x, y, -z}};
    case PatternKind::None:
      return {};
  }
  return {};
}

}  // namespace psdf::model
