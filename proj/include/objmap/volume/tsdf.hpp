// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "objmap/core/grid3.hpp"
#include "objmap/core/image.hpp"
#include "objmap/geometry/camera.hpp"
#include "objmap/geometry/transform.hpp"
#include "objmap/volume/mesh.hpp"

namespace objmap {

// Truncated signed distance volume in the object's canonical frame,
// [-1,1]^3 by default, distances in canonical units. Voxels never observed
// keep value +truncation and weight 0.
class TsdfVolume {
 public:
  explicit TsdfVolume(int resolution = 64, float truncation = 0.1f, float weight_cap = 64.f,
                      float lo = -1.f, float hi = 1.f)
      : tsdf_(resolution, lo, hi, truncation),
        weight_(resolution, lo, hi, 0.f),
        truncation_(truncation),
        weight_cap_(weight_cap) {}

  int resolution() const { return tsdf_.resolution(); }
  float truncation() const { return truncation_; }
  float weight_cap() const { return weight_cap_; }
  // Observations at grazing incidence (surface normal from depth differences)
  // are unreliable for projective fusion and are treated as invalid.
  void set_min_cos_incidence(float c) { min_cos_incidence_ = c; }
  const Grid3f& tsdf() const { return tsdf_; }
  const Grid3f& weight() const { return weight_; }
  Grid3f& tsdf() { return tsdf_; }
  Grid3f& weight() { return weight_; }

  // Projective fusion of one depth frame. Only pixels whose mask value equals
  // object_id contribute; pass mask = nullptr to use every valid depth pixel.
  // camera_pose maps camera to world.
  void integrate_depth(const DepthImage& depth, const MaskImage* mask, std::uint8_t object_id,
                       const ObjectPose& object_pose, const RigidTransform& camera_pose,
                       const CameraIntrinsics& intrinsics);

  // Trilinear (value, weight) at a canonical point; outside the extent the
  // volume reports unknown space (+truncation, 0).
  std::pair<double, double> sample_trilinear(const Eigen::Vector3d& p) const {
    if (!tsdf_.contains(p.cast<float>())) return {truncation_, 0.0};
    return {tsdf_.sample(p), weight_.sample(p)};
  }

  // Level-0 surface of the stored field. Unobserved voxels hold +truncation,
  // which closes the mesh around observed regions.
  TriMesh extract_surface() const;

  void save(const std::filesystem::path& path) const;
  static TsdfVolume load(const std::filesystem::path& path);

 private:
  Grid3f tsdf_;
  Grid3f weight_;
  float truncation_;
  float weight_cap_;
  float min_cos_incidence_ = 0.6f;
};

}  // namespace objmap
