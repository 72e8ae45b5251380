// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>

#include "objmap/geometry/trajectory.hpp"
#include "objmap/geometry/transform.hpp"
#include "objmap/volume/tsdf.hpp"

namespace objmap {

enum class ObjectStatus { kNew, kActive, kLost };

// One tracked object: pose, latent codes, and the canonical fused volume.
// The volume extent is fixed at creation; scale is frozen after the first
// successful coarse stage so later frames only move the rigid part.
struct ObjectState {
  int id = 0;
  std::string category;
  ObjectPose pose;
  Eigen::VectorXd z0;
  Eigen::VectorXd z1;
  TsdfVolume volume;
  ObjectStatus status = ObjectStatus::kNew;
  int last_seen = -1;
  int bad_streak = 0;         // consecutive high-error frames, for the lost test
  bool scale_frozen = false;
  Trajectory track;           // one entry per processed frame since creation
};

// Everything the pipeline accumulates over a run. Objects are keyed by their
// detection mask id and never deleted; lost objects keep absorbing their
// detection so a drifted track cannot respawn as a duplicate.
struct WorldMap {
  std::map<int, ObjectState> objects;
  Trajectory camera;
  std::optional<TsdfVolume> background;  // world-frame volume for camera ICP
};

}  // namespace objmap
