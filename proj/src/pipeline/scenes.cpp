#include "psdf/pipeline/scenes.hpp"

#include "psdf/error.hpp"
#include "psdf/rng.hpp"

namespace psdf::pipeline {

using geometry::make_box;
using geometry::make_capsule;
using geometry::make_sphere;
using geometry::make_subtraction;
using geometry::make_union;
using geometry::SceneNode;
using geometry::Vec3;

const std::vector<std::string>& scene_template_names() {
  static const std::vector<std::string> names{"table", "chair", "lamp", "dumbbell",
                                              "bench", "rocket", "mug", "blob"};
  return names;
}

namespace {

std::vector<SceneNode> four_legs(double x, double z, double top, double bottom, double half_width) {
  std::vector<SceneNode> legs;
  const double mid = 0.5 * (top + bottom), half = 0.5 * (top - bottom);
  for (double sx : {-1.0, 1.0}) {
    for (double sz : {-1.0, 1.0}) {
      legs.push_back(make_box({sx * x, mid, sz * z}, {half_width, half, half_width}));
    }
  }
  return legs;
}

SceneNode build(const std::string& name, CounterRng& rng) {
  auto jitter = [&](double v) { return v * rng.uniform(0.85, 1.15); };
  if (name == "table") {
    const double w = jitter(0.8), d = jitter(0.55), t = jitter(0.08), leg = jitter(0.08), h = jitter(0.6);
    auto parts = four_legs(w - leg - 0.03, d - leg - 0.03, h, -h, leg);
    parts.push_back(make_box({0, h + t, 0}, {w, t, d}));
    return make_union(std::move(parts));
  }
  if (name == "chair") {
    const double w = jitter(0.45), t = jitter(0.08), leg = jitter(0.08), h = jitter(0.45), back = jitter(0.55);
    auto parts = four_legs(w - leg, w - leg, 0.0, -h, leg);
    parts.push_back(make_box({0, t, 0}, {w, t, w}));
    parts.push_back(make_box({0, 2 * t + back, -w + t}, {w, back, t}));
    return make_union(std::move(parts));
  }
  if (name == "lamp") {
    const double base = jitter(0.4), pole = jitter(0.07), h = jitter(0.7), shade = jitter(0.35);
    return make_union({make_box({0, -h, 0}, {base, 0.08, base}),
                       make_capsule({0, -h, 0}, {0, h * 0.6, 0}, pole),
                       make_sphere({0, h * 0.6 + shade * 0.6, 0}, shade)});
  }
  if (name == "dumbbell") {
    const double r = jitter(0.35), len = jitter(0.65), bar = jitter(0.12);
    return make_union({make_sphere({-len, 0, 0}, r), make_sphere({len, 0, 0}, r),
                       make_capsule({-len, 0, 0}, {len, 0, 0}, bar)});
  }
  if (name == "bench") {
    const double w = jitter(0.85), d = jitter(0.3), t = jitter(0.09), h = jitter(0.35), slab = jitter(0.09);
    return make_union({make_box({0, h + t, 0}, {w, t, d}),
                       make_box({-w + slab + 0.05, 0, 0}, {slab, h, d * 0.9}),
                       make_box({w - slab - 0.05, 0, 0}, {slab, h, d * 0.9})});
  }
  if (name == "rocket") {
    const double r = jitter(0.22), len = jitter(0.6), fin = jitter(0.3);
    std::vector<SceneNode> parts{make_capsule({0, -len, 0}, {0, len, 0}, r)};
    parts.push_back(make_box({r + fin * 0.5, -len + 0.1, 0}, {fin * 0.5, 0.2, 0.06}));
    parts.push_back(make_box({-r - fin * 0.5, -len + 0.1, 0}, {fin * 0.5, 0.2, 0.06}));
    parts.push_back(make_box({0, -len + 0.1, r + fin * 0.5}, {0.06, 0.2, fin * 0.5}));
    return make_union(std::move(parts));
  }
  if (name == "mug") {
    const double r = jitter(0.45), h = jitter(0.55), wall = jitter(0.1);
    SceneNode body = make_subtraction(make_box({0, 0, 0}, {r, h, r}),
                                      {make_box({0, wall + 0.05, 0}, {r - wall, h, r - wall})});
    return make_union({std::move(body), make_capsule({r + 0.12, -h * 0.4, 0}, {r + 0.12, h * 0.4, 0}, 0.09)});
  }
  if (name == "blob") {
    std::vector<SceneNode> parts;
    for (int i = 0; i < 3; ++i) {
      parts.push_back(make_sphere({rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35)},
                                  rng.uniform(0.3, 0.45)));
    }
    return make_union(std::move(parts));
  }
  throw DataError("unknown scene template '" + name + "'");
}

}  // namespace

geometry::SdfScene make_template_scene(const std::string& name, std::uint64_t seed) {
  CounterRng rng(seed, 0x7363656e65);
  return geometry::normalize_scene(geometry::SdfScene(build(name, rng)));
}

}  // namespace psdf::pipeline
