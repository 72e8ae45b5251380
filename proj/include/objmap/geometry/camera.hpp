// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

namespace objmap {

// Pinhole model, z-forward / x-right / y-down camera frame. Pixel centers sit
// at integer coordinates, so a WxH image spans [-0.5, W-0.5) x [-0.5, H-0.5).
struct CameraIntrinsics {
  int width = 320;
  int height = 240;
  double fx = 250.0;
  double fy = 250.0;
  double cx = 159.5;
  double cy = 119.5;

  static CameraIntrinsics defaults() { return {}; }

  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }

  // Ray direction through pixel (u, v), unit depth (z = 1).
  Eigen::Vector3d ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }

  Eigen::Vector3d backproject(double u, double v, double depth) const {
    return ray(u, v) * depth;
  }

  bool in_image(const Eigen::Vector2d& uv) const {
    return uv.x() >= -0.5 && uv.x() < width - 0.5 && uv.y() >= -0.5 && uv.y() < height - 0.5;
  }
};

}  // namespace objmap
