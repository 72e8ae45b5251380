// SPDX-License-Identifier: Apache-2.0

#include "objmap/render/render.hpp"

#include <algorithm>
#include <cmath>

#include "objmap/core/errors.hpp"
#include "objmap/geometry/aabb.hpp"

namespace objmap {

RenderResult render_depth_differentiable(const std::vector<double>& depths,
                                         const std::vector<double>& occupancies,
                                         bool with_grads) {
  const std::size_t n = depths.size();
  if (occupancies.size() != n) throw ValidationError("ray sample size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (occupancies[i] < 0.0 || occupancies[i] > 1.0)
      throw ValidationError("ray occupancy outside [0,1]");
    if (i > 0 && depths[i] <= depths[i - 1])
      throw ValidationError("ray depths must be strictly increasing");
  }

  RenderResult out;
  double transmittance = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = occupancies[i] * transmittance;
    out.depth += w * depths[i];
    out.mass += w;
    transmittance *= 1.0 - occupancies[i];
  }

  if (with_grads) {
    // Suffix recursions keep the chain rule O(N) and free of divisions:
    //   dD/do_i = T_i (d_i - S_i)   with S_i the depth rendered behind i,
    //   dM/do_i = T_i (1 - Q_i)     with Q_i the mass rendered behind i.
    out.d_depth_do.resize(n);
    out.d_mass_do.resize(n);
    double suffix_depth = 0.0, suffix_mass = 0.0;
    std::vector<double> prefix_t(n);
    double t = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      prefix_t[i] = t;
      t *= 1.0 - occupancies[i];
    }
    for (std::size_t ri = n; ri-- > 0;) {
      out.d_depth_do[ri] = prefix_t[ri] * (depths[ri] - suffix_depth);
      out.d_mass_do[ri] = prefix_t[ri] * (1.0 - suffix_mass);
      suffix_depth = occupancies[ri] * depths[ri] + (1.0 - occupancies[ri]) * suffix_depth;
      suffix_mass = occupancies[ri] + (1.0 - occupancies[ri]) * suffix_mass;
    }
  }
  return out;
}

Bbox2i project_bbox(const ObjectPose& pose, const RigidTransform& camera,
                    const CameraIntrinsics& intrinsics, double lo, double hi) {
  const RigidTransform world_to_cam = camera.inverse();
  double u_min = 1e30, u_max = -1e30, v_min = 1e30, v_max = -1e30;
  int in_front = 0;
  bool behind = false;
  for (int c = 0; c < 8; ++c) {
    const Eigen::Vector3d corner(c & 1 ? hi : lo, c & 2 ? hi : lo, c & 4 ? hi : lo);
    const Eigen::Vector3d pc = world_to_cam.apply(pose.to_world(corner));
    if (pc.z() <= 1e-6) {
      behind = true;
      continue;
    }
    ++in_front;
    const Eigen::Vector2d px = intrinsics.project(pc);
    u_min = std::min(u_min, px.x());
    u_max = std::max(u_max, px.x());
    v_min = std::min(v_min, px.y());
    v_max = std::max(v_max, px.y());
  }
  if (in_front == 0) return {};
  if (behind) {
    // Box pierces the camera plane; give up on tight bounds.
    u_min = 0;
    v_min = 0;
    u_max = intrinsics.width;
    v_max = intrinsics.height;
  }
  Bbox2i b;
  b.u0 = std::max(0, static_cast<int>(std::floor(u_min)));
  b.v0 = std::max(0, static_cast<int>(std::floor(v_min)));
  b.u1 = std::min(intrinsics.width, static_cast<int>(std::ceil(u_max)) + 1);
  b.v1 = std::min(intrinsics.height, static_cast<int>(std::ceil(v_max)) + 1);
  if (b.u1 < b.u0) b.u1 = b.u0;
  if (b.v1 < b.v0) b.v1 = b.v0;
  return b;
}

std::vector<Eigen::Vector2i> sample_rays_in_bbox(const Bbox2i& bbox, int count, Rng& rng) {
  std::vector<Eigen::Vector2i> pixels;
  if (bbox.empty() || count <= 0) return pixels;
  pixels.reserve(static_cast<std::size_t>(count));
  std::uniform_int_distribution<int> du(bbox.u0, bbox.u1 - 1);
  std::uniform_int_distribution<int> dv(bbox.v0, bbox.v1 - 1);
  for (int i = 0; i < count; ++i) {
    const int u = du(rng);
    const int v = dv(rng);
    pixels.emplace_back(u, v);
  }
  return pixels;
}

MaskImage render_mask(const ScalarField& occupancy, const ObjectPose& pose,
                      const RigidTransform& camera, const CameraIntrinsics& intrinsics,
                      std::uint8_t value, int samples_per_ray) {
  MaskImage mask(intrinsics.width, intrinsics.height, 0);
  const Bbox2i bbox = project_bbox(pose, camera, intrinsics);
  if (bbox.empty()) return mask;

  const Aabb box = Aabb::cube(1.0);
  const Eigen::Vector3d origin = pose.to_canonical(camera.t);
  for (int v = bbox.v0; v < bbox.v1; ++v) {
    for (int u = bbox.u0; u < bbox.u1; ++u) {
      Eigen::Vector3d dir =
          pose.g.R.transpose() * (camera.R * intrinsics.ray(u, v)) / pose.scale;
      const double dir_norm = dir.norm();
      dir /= dir_norm;
      double t0, t1;
      if (!ray_aabb_intersect(origin, dir, box, t0, t1)) continue;
      const double step = (t1 - t0) / samples_per_ray;
      if (step <= 0) continue;
      double mass = 0.0, transmittance = 1.0;
      for (int i = 0; i < samples_per_ray; ++i) {
        const double t = t0 + step * (i + 0.5);
        const double o = occupancy(origin + t * dir);
        mass += o * transmittance;
        transmittance *= 1.0 - o;
        if (mass >= 0.5) break;
      }
      if (mass >= 0.5) mask.at(u, v) = value;
    }
  }
  return mask;
}

}  // namespace objmap
