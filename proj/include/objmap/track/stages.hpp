// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "objmap/pipeline/frame.hpp"
#include "objmap/shape/posterior.hpp"
#include "objmap/shape/prior.hpp"
#include "objmap/track/solver.hpp"
#include "objmap/volume/tsdf.hpp"

namespace objmap {

struct StageResult {
  SolveReport report;         // merged over the rebuild rounds
  double mean_abs_sdf = 0.0;  // prior SDF magnitude at the final state, for the lost test
  int rounds = 0;
  int sdf_points = 0;
  int rays = 0;
};

// Joint pose and prior-code estimation against one frame: signed-distance
// term over masked depth points, differentiable-render term over sampled
// rays, squared-norm regularizer on the whitened code. The latent is whitened
// by the prior score deviations so the regularizer weight is comparable to
// the data terms; z0 stays in model units at the interface. Scale is
// optimized only when optimize_scale is set (an object's first frame).
StageResult coarse_estimate(const Frame& frame, std::uint8_t object_id,
                            const LatentShapeModel& prior, ObjectPose& pose, Eigen::VectorXd& z0,
                            bool optimize_scale, const OptimizerConfig& config,
                            std::uint64_t seed);

// Pose and correction-code refinement against the fused volume: Fisher-scored
// occupancy term (targets 0.5 at back-projected surface points, 0 at empty
// samples drawn before the measured depth and behind background pixels),
// posterior render term, squared-norm regularizer on z1.
StageResult dense_refine(const Frame& frame, std::uint8_t object_id, const TsdfVolume& volume,
                         const LatentShapeModel& prior, const PosteriorShapeModel& posterior,
                         ObjectPose& pose, const Eigen::VectorXd& z0, Eigen::VectorXd& z1,
                         const OptimizerConfig& config, std::uint64_t seed);

// Ablation: coarse estimation only, no conditioned refinement.
StageResult prior_only_track(const Frame& frame, std::uint8_t object_id,
                             const LatentShapeModel& prior, ObjectPose& pose,
                             Eigen::VectorXd& z0, bool optimize_scale,
                             const OptimizerConfig& config, std::uint64_t seed);

}  // namespace objmap
