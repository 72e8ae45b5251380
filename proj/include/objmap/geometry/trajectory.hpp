// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "objmap/geometry/transform.hpp"

namespace objmap {

struct TimedPose {
  double timestamp = 0.0;
  ObjectPose pose;
};

using Trajectory = std::vector<TimedPose>;

// Text format, one pose per line:
//   timestamp tx ty tz qx qy qz qw scale
// '#' lines are comments. Written with fixed 9-digit precision so repeated
// runs produce byte-identical files.
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path);

}  // namespace objmap
