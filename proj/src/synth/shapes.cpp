// SPDX-License-Identifier: Apache-2.0

#include "objmap/synth/shapes.hpp"

#include <algorithm>
#include <cmath>

#include "objmap/core/errors.hpp"
#include "objmap/volume/marching_cubes.hpp"

namespace objmap {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("shape parameters: " + what);
}

double box_sdf(const Eigen::Vector3d& p, const Eigen::Vector3d& half) {
  const Eigen::Vector3d q = p.cwiseAbs() - half;
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

// Vertical capped cylinder: radius r, z in [z0, z1].
double cylinder_sdf(const Eigen::Vector3d& p, double cx, double cy, double r, double z0,
                    double z1) {
  const double radial = std::hypot(p.x() - cx, p.y() - cy) - r;
  const double axial = std::abs(p.z() - 0.5 * (z0 + z1)) - 0.5 * (z1 - z0);
  const double outside = std::hypot(std::max(radial, 0.0), std::max(axial, 0.0));
  return outside + std::min(std::max(radial, axial), 0.0);
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

ScalarField sphere_field(const SphereParams& p) {
  require(p.radius > 0.0 && p.radius <= 0.95, "sphere radius in (0, 0.95]");
  const double r = p.radius;
  return [r](const Eigen::Vector3d& q) { return q.norm() - r; };
}

ScalarField box_field(const BoxParams& p) {
  require((p.half.array() > 0.0).all() && (p.half.array() <= 0.5).all(),
          "box half extents in (0, 0.5]");
  const Eigen::Vector3d half = p.half;
  return [half](const Eigen::Vector3d& q) { return box_sdf(q, half); };
}

ScalarField superellipsoid_field(const SuperellipsoidParams& p) {
  require((p.half.array() > 0.0).all() && (p.half.array() <= 0.5).all(),
          "superellipsoid half extents in (0, 0.5]");
  require(p.exponent >= 2.0 && p.exponent <= 8.0, "superellipsoid exponent in [2, 8]");
  const Eigen::Vector3d half = p.half;
  const double k = p.exponent;
  // Radial distance estimate: m is 1-homogeneous with m = 1 on the surface,
  // so p/m lies on the surface and |p|(1 - 1/m) measures along the radial
  // chord. Exact for spheres and on the axes; elsewhere a mild overestimate
  // that the raycaster's conservative stepping and bisection absorb.
  return [half, k](const Eigen::Vector3d& q) {
    const double n = q.norm();
    if (n < 1e-12) return -half.minCoeff();
    const Eigen::Vector3d w = q.cwiseQuotient(half).cwiseAbs();
    const double m = std::pow(std::pow(w.x(), k) + std::pow(w.y(), k) + std::pow(w.z(), k),
                              1.0 / k);
    return n * (1.0 - 1.0 / std::max(m, 1e-12));
  };
}

ScalarField chair_field(const ChairParams& p) {
  require(p.seat_w >= 0.5 && p.seat_w <= 0.9, "seat width in [0.5, 0.9]");
  require(p.seat_d >= 0.45 && p.seat_d <= 0.8, "seat depth in [0.45, 0.8]");
  require(p.seat_t >= 0.06 && p.seat_t <= 0.12, "seat thickness in [0.06, 0.12]");
  require(p.seat_h >= 0.35 && p.seat_h <= 0.55, "seat height in [0.35, 0.55]");
  require(p.back_h >= 0.45 && p.back_h <= 0.8, "back height in [0.45, 0.8]");
  require(p.back_t >= 0.05 && p.back_t <= 0.10, "back thickness in [0.05, 0.10]");
  require(p.leg_r >= 0.03 && p.leg_r <= 0.06, "leg radius in [0.03, 0.06]");

  // Chair faces +x, ground at z = 0 in generator coordinates.
  const Eigen::Vector3d seat_half(0.5 * p.seat_d, 0.5 * p.seat_w, 0.5 * p.seat_t);
  const Eigen::Vector3d seat_center(0.0, 0.0, p.seat_h - 0.5 * p.seat_t);
  // Back and legs overlap the seat slab instead of touching it exactly, so
  // the union has no zero-thickness junctions for meshing to pinch.
  const Eigen::Vector3d back_half(0.5 * p.back_t, 0.5 * p.seat_w,
                                  0.5 * (p.back_h + p.seat_t));
  const Eigen::Vector3d back_center(-0.5 * p.seat_d + 0.5 * p.back_t, 0.0,
                                    p.seat_h + 0.5 * (p.back_h - p.seat_t));
  const double leg_x = 0.5 * p.seat_d - p.leg_r - 0.02;
  const double leg_y = 0.5 * p.seat_w - p.leg_r - 0.02;
  const double leg_top = p.seat_h - 0.5 * p.seat_t;
  const double leg_r = p.leg_r;

  // Generator-space bounds, used to center and scale into the 0.95 ball.
  const Eigen::Vector3d bb_lo(-0.5 * p.seat_d, -0.5 * p.seat_w, 0.0);
  const Eigen::Vector3d bb_hi(0.5 * p.seat_d, 0.5 * p.seat_w, p.seat_h + p.back_h);
  const Eigen::Vector3d center = 0.5 * (bb_lo + bb_hi);
  const double corner = (0.5 * (bb_hi - bb_lo)).norm();
  const double alpha = 0.95 / corner;

  return [=](const Eigen::Vector3d& q) {
    const Eigen::Vector3d g = center + q / alpha;
    double d = box_sdf(g - seat_center, seat_half);
    d = std::min(d, box_sdf(g - back_center, back_half));
    d = std::min(d, cylinder_sdf(g, leg_x, leg_y, leg_r, 0.0, leg_top));
    d = std::min(d, cylinder_sdf(g, leg_x, -leg_y, leg_r, 0.0, leg_top));
    d = std::min(d, cylinder_sdf(g, -leg_x, leg_y, leg_r, 0.0, leg_top));
    d = std::min(d, cylinder_sdf(g, -leg_x, -leg_y, leg_r, 0.0, leg_top));
    return alpha * d;
  };
}

SphereParams random_sphere(Rng& rng) {
  SphereParams p;
  p.radius = uniform(rng, 0.3, 0.7);
  return p;
}

BoxParams random_box(Rng& rng) {
  BoxParams p;
  for (int a = 0; a < 3; ++a) p.half(a) = uniform(rng, 0.25, 0.5);
  return p;
}

SuperellipsoidParams random_superellipsoid(Rng& rng) {
  SuperellipsoidParams p;
  for (int a = 0; a < 3; ++a) p.half(a) = uniform(rng, 0.25, 0.5);
  p.exponent = uniform(rng, 2.0, 8.0);
  return p;
}

ChairParams random_chair(Rng& rng) {
  ChairParams p;
  p.seat_w = uniform(rng, 0.5, 0.9);
  p.seat_d = uniform(rng, 0.45, 0.8);
  p.seat_t = uniform(rng, 0.06, 0.12);
  p.seat_h = uniform(rng, 0.35, 0.55);
  p.back_h = uniform(rng, 0.45, 0.8);
  p.back_t = uniform(rng, 0.05, 0.10);
  p.leg_r = uniform(rng, 0.03, 0.06);
  return p;
}

SynthShape make_shape(const std::string& category, const ScalarField& sdf,
                      int mesh_resolution) {
  SynthShape shape;
  shape.category = category;
  shape.sdf = sdf;
  const Grid3f grid = sample_field(sdf, mesh_resolution, -1.f, 1.f);
  shape.mesh = extract_mesh(grid, 0.f, &sdf);
  return shape;
}

SynthShape generate_shape(const std::string& category, Rng& rng, int mesh_resolution) {
  if (category == "sphere") return make_shape(category, sphere_field(random_sphere(rng)),
                                              mesh_resolution);
  if (category == "box") return make_shape(category, box_field(random_box(rng)),
                                           mesh_resolution);
  if (category == "superellipsoid")
    return make_shape(category, superellipsoid_field(random_superellipsoid(rng)),
                      mesh_resolution);
  if (category == "chair") return make_shape(category, chair_field(random_chair(rng)),
                                             mesh_resolution);
  throw ValidationError("unknown shape category: " + category);
}

std::vector<ScalarField> prior_training_fields(const std::string& category, int count,
                                               std::uint64_t seed) {
  std::vector<ScalarField> fields;
  fields.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto rng = make_rng(substream(seed, 0x70726931u, i));
    if (category == "sphere") {
      fields.push_back(sphere_field(random_sphere(rng)));
    } else if (category == "box") {
      fields.push_back(box_field(random_box(rng)));
    } else if (category == "superellipsoid") {
      fields.push_back(superellipsoid_field(random_superellipsoid(rng)));
    } else if (category == "chair") {
      fields.push_back(chair_field(random_chair(rng)));
    } else {
      throw ValidationError("unknown shape category: " + category);
    }
  }
  return fields;
}

}  // namespace objmap
