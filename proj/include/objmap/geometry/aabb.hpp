// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <limits>

namespace objmap {

struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Constant(std::numeric_limits<double>::max());
  Eigen::Vector3d max = Eigen::Vector3d::Constant(std::numeric_limits<double>::lowest());

  static Aabb cube(double half_extent) {
    return {Eigen::Vector3d::Constant(-half_extent), Eigen::Vector3d::Constant(half_extent)};
  }

  bool empty() const { return (min.array() > max.array()).any(); }
  Eigen::Vector3d center() const { return 0.5 * (min + max); }
  Eigen::Vector3d extents() const { return max - min; }

  void expand(const Eigen::Vector3d& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  Aabb inflated(double margin) const {
    return {min - Eigen::Vector3d::Constant(margin), max + Eigen::Vector3d::Constant(margin)};
  }

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

// Slab test. On hit returns the entry/exit parameters along origin + t*dir
// with t_near clamped to >= 0 (ray, not line). Axes with a zero direction
// component reject the ray when the origin lies outside that slab.
inline bool ray_aabb_intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                               const Aabb& box, double& t_near, double& t_far) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::max();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box.min[a] || origin[a] > box.max[a]) return false;
      continue;
    }
    const double inv = 1.0 / dir[a];
    double ta = (box.min[a] - origin[a]) * inv;
    double tb = (box.max[a] - origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  t_near = t0;
  t_far = t1;
  return true;
}

}  // namespace objmap
