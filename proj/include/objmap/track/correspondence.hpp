// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "objmap/core/image.hpp"
#include "objmap/core/rng.hpp"
#include "objmap/geometry/camera.hpp"
#include "objmap/geometry/transform.hpp"
#include "objmap/synth/noise.hpp"

namespace objmap {

// Per-pixel canonical-coordinate predictions with confidences, the shape the
// correspondence network would produce.
struct CorrespondenceSet {
  std::vector<Eigen::Vector3d> camera_points;     // back-projected, camera frame
  std::vector<Eigen::Vector3d> canonical_points;  // predicted v
  std::vector<double> confidences;                // w in [0,1]
  std::size_t size() const { return camera_points.size(); }
};

// Oracle-with-noise stand-in for the correspondence network: true canonical
// coordinates from the ground-truth pose, corrupted by Gaussian noise and a
// fraction of uniform outliers; confidences track inlier status with their
// own noise. Deterministic for a given rng state.
CorrespondenceSet predict_correspondences(const DepthImage& depth, const MaskImage& mask,
                                          std::uint8_t object_id,
                                          const CameraIntrinsics& intrinsics,
                                          const RigidTransform& camera_pose,
                                          const ObjectPose& gt_object_pose,
                                          const NoiseModel& noise, Rng& rng,
                                          int max_points = 2048);

// Weighted similarity alignment (Umeyama) from canonical to camera points:
// camera ~= s R canonical + t, rotation kept proper. Rank-deficient weighted
// covariance (coincident or collinear support) raises DegenerateGeometryError.
ObjectPose umeyama_align(const CorrespondenceSet& correspondences);

}  // namespace objmap
