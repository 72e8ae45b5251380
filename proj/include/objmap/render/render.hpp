// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <vector>

#include "objmap/core/image.hpp"
#include "objmap/core/rng.hpp"
#include "objmap/geometry/camera.hpp"
#include "objmap/geometry/transform.hpp"
#include "objmap/shape/prior.hpp"

namespace objmap {

// Front-to-back compositing along one ray: w_i = o_i * prod_{j<i} (1 - o_j),
// depth = sum w_i d_i, mass = sum w_i. Weights are not renormalized, so rays
// through free space report low mass and the caller decides what a miss means.
struct RenderResult {
  double depth = 0.0;
  double mass = 0.0;
  std::vector<double> d_depth_do;
  std::vector<double> d_mass_do;
};

RenderResult render_depth_differentiable(const std::vector<double>& depths,
                                         const std::vector<double>& occupancies,
                                         bool with_grads = false);

// Integer pixel rectangle, half-open on the high side.
struct Bbox2i {
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;
  int width() const { return u1 - u0; }
  int height() const { return v1 - v0; }
  bool empty() const { return width() <= 0 || height() <= 0; }
};

// Pixel bounds of the scaled canonical box [lo,hi]^3 under pose, clipped to
// the image. Corners behind the camera widen the bounds to the full image;
// every corner behind the camera yields an empty box.
Bbox2i project_bbox(const ObjectPose& pose, const RigidTransform& camera,
                    const CameraIntrinsics& intrinsics, double lo = -1.0, double hi = 1.0);

// Uniform pixel draws over a bbox, deterministic for a given rng state.
std::vector<Eigen::Vector2i> sample_rays_in_bbox(const Bbox2i& bbox, int count, Rng& rng);

// Silhouette of a canonical occupancy field under pose: a pixel is set when
// the composited termination mass along its ray reaches 0.5. Sampling runs
// between the ray's entry and exit of the scaled canonical box.
MaskImage render_mask(const ScalarField& occupancy, const ObjectPose& pose,
                      const RigidTransform& camera, const CameraIntrinsics& intrinsics,
                      std::uint8_t value = 1, int samples_per_ray = 64);

}  // namespace objmap
