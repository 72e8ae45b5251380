// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "objmap/core/rng.hpp"
#include "objmap/geometry/transform.hpp"

namespace objmap {

// Per-frame world-frame twist bounds for smooth random motion. Zero bounds
// give a constant pose.
struct MotionSpec {
  double rot_max_deg = 1.0;
  double trans_max = 0.01;
  int smooth_window = 9;
};

// Camera pose looking from eye toward target, z-forward x-right y-down, with
// world +z as the up reference.
RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target);

// C1-smooth random trajectory: white twist noise box-filtered over
// smooth_window frames, rescaled so every per-frame rotation and translation
// delta is within the spec bounds, then integrated from `initial` with
// world-frame increments.
std::vector<RigidTransform> sample_motion(const RigidTransform& initial, const MotionSpec& spec,
                                          int frames, Rng& rng);

// Antipodally paired uniform view directions at fixed radius, looking at
// `target`. The pairing guarantees every hemisphere holds at least 40% of the
// views regardless of the draw.
std::vector<RigidTransform> sample_viewpoints(int count, double radius,
                                              const Eigen::Vector3d& target, Rng& rng);

}  // namespace objmap
