// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "objmap/geometry/transform.hpp"
#include "objmap/shape/posterior.hpp"
#include "objmap/shape/prior.hpp"
#include "objmap/track/solver.hpp"
#include "objmap/volume/tsdf.hpp"

namespace objmap {

// Layout of the flat parameter vector shared by all blocks of one stage:
// rotation (3) and translation (3) increments first, then an optional
// log-scale entry, then the latent code. Pose entries are increments applied
// on the left of a shared base pose; rebase folds them in and zeroes them.
struct ParamLayout {
  bool with_scale = false;
  int code_dim = 0;
  int scale_index() const { return with_scale ? 6 : -1; }
  int code_offset() const { return with_scale ? 7 : 6; }
  int dim() const { return code_offset() + code_dim; }
};

// Shared mutable pose state plus the code scaling that maps optimizer code
// coordinates to model code units (whitened latents for the PCA prior).
struct PoseCodeState {
  ObjectPose base;
  ParamLayout layout;
  Eigen::VectorXd code_scale;  // length code_dim; model code = scale .* x_code

  ObjectPose pose_at(const Eigen::VectorXd& x) const;
  Eigen::VectorXd model_code_at(const Eigen::VectorXd& x) const;
  // Left-multiplicative twist applied to a rigid transform with scale factor.
  static ObjectPose apply_increment(const ObjectPose& base, const Eigen::Vector3d& rot,
                                    const Eigen::Vector3d& trans, double log_scale);
};

// Rebase closure for gauss_newton_solve: folds the accepted pose increment
// into state->base and returns the vector with pose entries cleared.
std::function<Eigen::VectorXd(const Eigen::VectorXd&)> make_rebase(
    std::shared_ptr<PoseCodeState> state);

// Signed-distance residual over back-projected masked depth points, with
// Huber weights frozen at the state x0 passed in.
ResidualBlock make_sdf_block(std::shared_ptr<PoseCodeState> state, const LatentShapeModel& prior,
                             std::vector<Eigen::Vector3d> points_world,
                             const Eigen::VectorXd& x0, double sigma, double weight);

// Differentiable-render residual on a frozen set of rays: fixed world-space
// sample depths, fixed measured depth, prior occupancy (coarse stage).
struct RenderRay {
  Eigen::Vector3d origin;     // world
  Eigen::Vector3d direction;  // world, unit
  std::vector<double> sample_depths;
  double measured_depth = 0.0;  // along the ray
  double far_depth = 0.0;       // box exit, the miss target
  double huber = 1.0;           // filled when the block freezes its context
};

ResidualBlock make_render_block_prior(std::shared_ptr<PoseCodeState> state,
                                      const LatentShapeModel& prior, std::vector<RenderRay> rays,
                                      const Eigen::VectorXd& x0, double sigma, double weight);

// Same residual with posterior occupancy; the code entries drive z1 and the
// prior code is frozen.
ResidualBlock make_render_block_posterior(std::shared_ptr<PoseCodeState> state,
                                          const TsdfVolume& volume,
                                          const LatentShapeModel& prior,
                                          const PosteriorShapeModel& posterior,
                                          Eigen::VectorXd z0_frozen, std::vector<RenderRay> rays,
                                          const Eigen::VectorXd& x0, double sigma, double weight);

// Fisher-scored binary cross-entropy residual q (o - target) with q frozen at
// the state x0 passed in, over fixed world-space sample points.
struct OccSample {
  Eigen::Vector3d point_world;
  double target = 0.0;  // 0.5 occupied, 0 empty
  double q = 1.0;
};

ResidualBlock make_occ_block(std::shared_ptr<PoseCodeState> state, const TsdfVolume& volume,
                             const LatentShapeModel& prior, const PosteriorShapeModel& posterior,
                             Eigen::VectorXd z0_frozen, std::vector<OccSample> samples,
                             const Eigen::VectorXd& x0, double weight);

// Plain squared-norm regularizer on the code entries.
ResidualBlock make_code_reg_block(ParamLayout layout, double weight);

// Reference cross-entropy for reporting; the optimizer minimizes the scored
// quadratic surrogate instead.
double binary_cross_entropy(double predicted, double target, double eps = 1e-6);

double huber_weight(double residual, double delta);

}  // namespace objmap
