// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "objmap/core/image.hpp"
#include "objmap/geometry/camera.hpp"
#include "objmap/geometry/transform.hpp"

namespace testutil {

inline objmap::RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d up(0, 0, 1);
  if (std::abs(z.dot(up)) > 0.99) up = Eigen::Vector3d(0, 1, 0);
  const Eigen::Vector3d x = up.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  objmap::RigidTransform g;
  g.R.col(0) = x;
  g.R.col(1) = y;
  g.R.col(2) = z;
  g.t = eye;
  return g;
}

// Exact z-depth of a sphere centred at the origin, per pixel.
inline objmap::DepthImage render_sphere_depth(const objmap::CameraIntrinsics& cam,
                                              const objmap::RigidTransform& cam_pose,
                                              double radius) {
  objmap::DepthImage depth(cam.width, cam.height, 0.f);
  const Eigen::Vector3d q = cam_pose.t;  // sphere centre at origin
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Eigen::Vector3d d_world = cam_pose.R * cam.ray(u, v);
      const double a = d_world.squaredNorm();
      const double b = 2.0 * d_world.dot(q);
      const double c = q.squaredNorm() - radius * radius;
      const double disc = b * b - 4 * a * c;
      if (disc < 0) continue;
      const double t = (-b - std::sqrt(disc)) / (2 * a);
      if (t > 0) depth.at(u, v) = static_cast<float>(t);  // d.z = 1 so depth = t
    }
  }
  return depth;
}

inline std::vector<Eigen::Vector3d> fibonacci_directions(int n) {
  std::vector<Eigen::Vector3d> dirs;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

inline auto sphere_sdf(double radius) {
  return [radius](const Eigen::Vector3d& p) { return p.norm() - radius; };
}

inline auto box_sdf(const Eigen::Vector3d& half) {
  return [half](const Eigen::Vector3d& p) {
    const Eigen::Vector3d q = p.cwiseAbs() - half;
    const double outside = q.cwiseMax(0.0).norm();
    const double inside = std::min(q.maxCoeff(), 0.0);
    return outside + inside;
  };
}

}  // namespace testutil
