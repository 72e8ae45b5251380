// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "objmap/core/image.hpp"
#include "objmap/geometry/camera.hpp"
#include "objmap/geometry/transform.hpp"

namespace objmap {

// One RGB-D observation: depth in metres (0 = invalid), Lambertian intensity
// in [0,1], instance mask (0 = background), and the camera-to-world pose the
// tracker is told to use.
struct Frame {
  int index = 0;
  double timestamp = 0.0;
  DepthImage depth;
  GrayImage intensity;
  MaskImage mask;
  RigidTransform camera_pose;
  CameraIntrinsics intrinsics;
};

}  // namespace objmap
