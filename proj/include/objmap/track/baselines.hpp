// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "objmap/geometry/transform.hpp"
#include "objmap/pipeline/frame.hpp"
#include "objmap/volume/tsdf.hpp"

namespace objmap {

struct IcpConfig {
  int rounds = 4;          // re-association rounds
  int iters_per_round = 5;
  double huber = 0.01;     // metres
  double gate = 0.9;       // |tsdf| < gate * truncation counts as associated
  int min_points = 6;
  double rank_tol = 1e-9;  // eigenvalue ratio below which a DoF is unobservable
};

// Point-to-plane registration of measured world points against the fused
// model: the residual is the metric signed distance sampled from the volume,
// so the implicit target normal is the TSDF gradient. Only the rigid part
// moves; scale is taken from the initial pose. Raises a degenerate-geometry
// error (with the unobservable count) when the first linearization is rank
// deficient, and an insufficient-data error below min_points associations.
RigidTransform icp_point_to_plane(const std::vector<Eigen::Vector3d>& points_world,
                                  const TsdfVolume& volume, const ObjectPose& initial,
                                  const IcpConfig& config = {});

struct VoConfig {
  int levels = 3;
  int iters_per_level = 10;
  double huber = 0.1;          // intensity units
  double min_variance = 1e-4;  // masked-intensity variance gate
};

// Photometric alignment of the masked object region between two frames over a
// coarse-to-fine pyramid. Returns the world-frame object motion delta with
// p_b = delta * p_a. A textureless region (masked intensity variance below
// the gate) warns on stderr and returns the initial delta.
RigidTransform rgbd_vo_photometric(const Frame& frame_a, const Frame& frame_b,
                                   std::uint8_t object_id, const RigidTransform& initial,
                                   const VoConfig& config = {});

}  // namespace objmap
