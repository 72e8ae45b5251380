// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <vector>

#include "objmap/core/grid3.hpp"
#include "objmap/shape/prior.hpp"
#include "objmap/volume/tsdf.hpp"

namespace objmap {

// Occupancy from signed distance: a linear ramp of width 2*sigma clamped to
// [0,1]. With surface_offset = 0 the surface itself maps to occupancy 0 and
// the ramp saturates at sdf = -2*sigma; surface_offset = 0.5 centers the ramp
// on the surface instead.
double sdf_to_occupancy(double sdf, double sigma, double surface_offset = 0.0);
double sdf_to_occupancy(double sdf, double sigma, double surface_offset, double& d_sdf);

struct PosteriorEval {
  double o = 0.0;       // clamped to [0,1]
  double raw = 0.0;     // blend before the final clamp
  double gamma = 0.0;   // measurement confidence gate
  Eigen::Vector3d d_point = Eigen::Vector3d::Zero();
  Eigen::VectorXd d_z0;
  Eigen::VectorXd d_z1;
};

// Confidence-gated blend of measured (fused TSDF) and prior occupancy plus a
// low-frequency learned-correction surrogate:
//   o = clamp(gamma(c) * o_meas + (1 - gamma(c)) * o_prior + corr(p, z1), 0, 1)
// with c = min(weight / weight_cap, 1) and gamma = smoothstep(clamp(c/tau, 0, 1)).
// The correction basis is a fixed orthonormal 3D DCT-II dictionary on a coarse
// lattice, standing in for a learned completion decoder.
class PosteriorShapeModel {
 public:
  explicit PosteriorShapeModel(int correction_dim = 32, int correction_res = 16, float lo = -1.f,
                               float hi = 1.f);

  int correction_dim() const { return static_cast<int>(basis_.size()); }
  int correction_resolution() const { return basis_.empty() ? 0 : basis_[0].resolution(); }
  const Grid3f& correction_basis(int m) const { return basis_[static_cast<std::size_t>(m)]; }

  double sigma = 0.05;          // occupancy ramp half-width
  double tau = 0.25;            // confidence saturation point
  double surface_offset = 0.0;  // 0.5 shifts the occupancy ramp onto the surface

  // Correction field at a canonical point (clamped into the coarse lattice).
  double correction(const Eigen::Vector3d& p, const Eigen::VectorXd& z1,
                    Eigen::Vector3d* d_point = nullptr, Eigen::VectorXd* d_z1 = nullptr) const;

  // Posterior occupancy with analytic derivatives. Derivatives honor the
  // clamps: outside the active range of a clamp they are zero.
  PosteriorEval occupancy(const TsdfVolume& volume, const LatentShapeModel& prior,
                          const Eigen::Vector3d& p, const Eigen::VectorXd& z0,
                          const Eigen::VectorXd& z1, bool with_grads = false) const;

  // Signed-distance-flavored blend whose zero level is the blended surface,
  // for mesh extraction of the completed model:
  //   gamma * tsdf + (1 - gamma) * prior_sdf - 2 * sigma * corr
  double completed_sdf(const TsdfVolume& volume, const LatentShapeModel& prior,
                       const Eigen::Vector3d& p, const Eigen::VectorXd& z0,
                       const Eigen::VectorXd& z1) const;

 private:
  std::vector<Grid3f> basis_;
};

}  // namespace objmap
