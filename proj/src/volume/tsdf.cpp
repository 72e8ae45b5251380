// SPDX-License-Identifier: Apache-2.0

#include "objmap/volume/tsdf.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "objmap/core/errors.hpp"
#include "objmap/volume/marching_cubes.hpp"

namespace objmap {

void TsdfVolume::integrate_depth(const DepthImage& depth, const MaskImage* mask,
                                 std::uint8_t object_id, const ObjectPose& object_pose,
                                 const RigidTransform& camera_pose,
                                 const CameraIntrinsics& intrinsics) {
  const RigidTransform world_to_cam = camera_pose.inverse();
  const double s = object_pose.scale;
  const int res = tsdf_.resolution();
  const float mu = truncation_;

  // Compose canonical -> camera once.
  const Eigen::Matrix3d Rcw = world_to_cam.R;
  const Eigen::Matrix3d A = Rcw * object_pose.g.R * s;
  const Eigen::Vector3d b = Rcw * object_pose.g.t + world_to_cam.t;

  auto depth_at = [&](int u, int v) -> double {
    const float d = depth.at(u, v);
    return (d > 0.f && std::isfinite(d)) ? static_cast<double>(d) : -1.0;
  };

  // Bilinear depth with a validity guard: any invalid corner rejects the
  // sample (depth edges must not be interpolated across).
  auto depth_bilinear = [&](double u, double v) -> double {
    const int u0 = static_cast<int>(std::floor(u));
    const int v0 = static_cast<int>(std::floor(v));
    if (u0 < 0 || u0 + 1 >= depth.width() || v0 < 0 || v0 + 1 >= depth.height()) return -1.0;
    const double d00 = depth_at(u0, v0), d10 = depth_at(u0 + 1, v0);
    const double d01 = depth_at(u0, v0 + 1), d11 = depth_at(u0 + 1, v0 + 1);
    if (d00 < 0 || d10 < 0 || d01 < 0 || d11 < 0) return -1.0;
    const double fu = u - u0, fv = v - v0;
    return (d00 * (1 - fu) + d10 * fu) * (1 - fv) + (d01 * (1 - fu) + d11 * fu) * fv;
  };

  // cos of the angle between the viewing ray and the measured surface
  // normal (central depth differences in the camera frame).
  auto cos_incidence = [&](int u, int v) -> double {
    if (u < 1 || u + 1 >= depth.width() || v < 1 || v + 1 >= depth.height()) return -1.0;
    const double dl = depth_at(u - 1, v), dr = depth_at(u + 1, v);
    const double dt = depth_at(u, v - 1), db = depth_at(u, v + 1);
    const double dc = depth_at(u, v);
    if (dl < 0 || dr < 0 || dt < 0 || db < 0 || dc < 0) return -1.0;
    const Eigen::Vector3d du =
        intrinsics.backproject(u + 1, v, dr) - intrinsics.backproject(u - 1, v, dl);
    const Eigen::Vector3d dv =
        intrinsics.backproject(u, v + 1, db) - intrinsics.backproject(u, v - 1, dt);
    const Eigen::Vector3d n = du.cross(dv);
    const double nn = n.norm();
    if (nn < 1e-12) return -1.0;
    return std::abs(n.dot(intrinsics.ray(u, v).normalized())) / nn;
  };

  for (int k = 0; k < res; ++k) {
    for (int j = 0; j < res; ++j) {
      for (int i = 0; i < res; ++i) {
        const Eigen::Vector3d v = tsdf_.node_position_d(i, j, k);
        const Eigen::Vector3d q = A * v + b;
        if (q.z() <= 1e-6) continue;
        const Eigen::Vector2d uv = intrinsics.project(q);
        const int u = static_cast<int>(std::lround(uv.x()));
        const int vpx = static_cast<int>(std::lround(uv.y()));
        if (u < 0 || u >= depth.width() || vpx < 0 || vpx >= depth.height()) continue;
        if (mask && mask->at(u, vpx) != object_id) continue;
        double d = depth_bilinear(uv.x(), uv.y());
        if (d < 0) d = depth_at(u, vpx);
        if (d < 0) continue;
        if (cos_incidence(u, vpx) < min_cos_incidence_) continue;
        const double sdf = (d - q.z()) / s;
        if (sdf <= -static_cast<double>(mu)) continue;
        const double x = static_cast<float>(std::min(sdf, static_cast<double>(mu)));
        const std::size_t idx = tsdf_.index(i, j, k);
        const double w = weight_[idx];
        tsdf_[idx] = static_cast<float>((w * tsdf_[idx] + x) / (w + 1.0));
        weight_[idx] = static_cast<float>(std::min(w + 1.0, static_cast<double>(weight_cap_)));
      }
    }
  }
}

TriMesh TsdfVolume::extract_surface() const { return extract_mesh(tsdf_, 0.f); }

void TsdfVolume::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  const std::uint32_t res = static_cast<std::uint32_t>(tsdf_.resolution());
  const float extent[6] = {tsdf_.lo(), tsdf_.lo(), tsdf_.lo(), tsdf_.hi(), tsdf_.hi(), tsdf_.hi()};
  out.write(reinterpret_cast<const char*>(&res), sizeof(res));
  out.write(reinterpret_cast<const char*>(extent), sizeof(extent));
  out.write(reinterpret_cast<const char*>(&truncation_), sizeof(truncation_));
  out.write(reinterpret_cast<const char*>(tsdf_.data().data()),
            static_cast<std::streamsize>(tsdf_.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(weight_.data().data()),
            static_cast<std::streamsize>(weight_.size() * sizeof(float)));
  if (!out) throw ValidationError("short write to " + path.string());
}

TsdfVolume TsdfVolume::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::uint32_t res = 0;
  float extent[6];
  float trunc = 0;
  in.read(reinterpret_cast<char*>(&res), sizeof(res));
  in.read(reinterpret_cast<char*>(extent), sizeof(extent));
  in.read(reinterpret_cast<char*>(&trunc), sizeof(trunc));
  if (!in || res < 2 || res > 4096) throw ValidationError("bad volume header in " + path.string());
  TsdfVolume vol(static_cast<int>(res), trunc, 64.f, extent[0], extent[3]);
  in.read(reinterpret_cast<char*>(vol.tsdf_.data().data()),
          static_cast<std::streamsize>(vol.tsdf_.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(vol.weight_.data().data()),
          static_cast<std::streamsize>(vol.weight_.size() * sizeof(float)));
  if (!in) throw ValidationError("truncated volume file " + path.string());
  return vol;
}

}  // namespace objmap
