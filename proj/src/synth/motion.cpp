// SPDX-License-Identifier: Apache-2.0

#include "objmap/synth/motion.hpp"

#include <cmath>

namespace objmap {

RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d up(0, 0, 1);
  if (std::abs(z.dot(up)) > 0.99) up = Eigen::Vector3d(0, 1, 0);
  const Eigen::Vector3d x = z.cross(up).normalized();  // right; y = z x x points down
  const Eigen::Vector3d y = z.cross(x);
  RigidTransform g;
  g.R.col(0) = x;
  g.R.col(1) = y;
  g.R.col(2) = z;
  g.t = eye;
  return g;
}

std::vector<RigidTransform> sample_motion(const RigidTransform& initial, const MotionSpec& spec,
                                          int frames, Rng& rng) {
  std::vector<RigidTransform> poses;
  poses.reserve(static_cast<std::size_t>(frames));
  poses.push_back(initial);
  if (frames <= 1) return poses;

  const int n = frames - 1;  // per-frame deltas
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd raw(6, n);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < 6; ++d) raw(d, i) = gauss(rng);

  // Centered box filter with edge clamping keeps consecutive deltas strongly
  // correlated, so k-frame subsampling scales per-step motion by about k.
  const int w = std::max(1, spec.smooth_window);
  Eigen::MatrixXd smooth(6, n);
  for (int i = 0; i < n; ++i) {
    Eigen::Matrix<double, 6, 1> acc = Eigen::Matrix<double, 6, 1>::Zero();
    for (int j = i - w / 2; j <= i + w / 2; ++j)
      acc += raw.col(std::clamp(j, 0, n - 1));
    smooth.col(i) = acc / static_cast<double>(2 * (w / 2) + 1);
  }

  double max_rot = 0.0, max_trans = 0.0;
  for (int i = 0; i < n; ++i) {
    max_rot = std::max(max_rot, smooth.col(i).head<3>().norm());
    max_trans = std::max(max_trans, smooth.col(i).tail<3>().norm());
  }
  const double rot_bound = spec.rot_max_deg * M_PI / 180.0;
  const double rot_scale = (spec.rot_max_deg > 0.0 && max_rot > 0.0) ? rot_bound / max_rot : 0.0;
  const double trans_scale =
      (spec.trans_max > 0.0 && max_trans > 0.0) ? spec.trans_max / max_trans : 0.0;

  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d omega = rot_scale * smooth.col(i).head<3>();
    const Eigen::Vector3d u = trans_scale * smooth.col(i).tail<3>();
    const RigidTransform& prev = poses.back();
    RigidTransform next;
    next.R = so3_exp(omega) * prev.R;
    next.t = prev.t + u;
    poses.push_back(next);
  }
  return poses;
}

std::vector<RigidTransform> sample_viewpoints(int count, double radius,
                                              const Eigen::Vector3d& target, Rng& rng) {
  std::vector<RigidTransform> views;
  views.reserve(static_cast<std::size_t>(count));
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (static_cast<int>(views.size()) < count) {
    Eigen::Vector3d dir(gauss(rng), gauss(rng), gauss(rng));
    const double n = dir.norm();
    if (n < 1e-9) continue;
    dir /= n;
    views.push_back(look_at(target + radius * dir, target));
    if (static_cast<int>(views.size()) < count)
      views.push_back(look_at(target - radius * dir, target));
  }
  return views;
}

}  // namespace objmap
