// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>

namespace objmap {

inline Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d S;
  S << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return S;
}

// Rodrigues. Stable near zero via the series for sin(t)/t and (1-cos t)/t^2.
inline Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double t2 = w.squaredNorm();
  const double t = std::sqrt(t2);
  double a, b;
  if (t < 1e-8) {
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  const Eigen::Matrix3d S = skew(w);
  return Eigen::Matrix3d::Identity() + a * S + b * S * S;
}

inline Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  const double tr = R.trace();
  const double cos_t = std::clamp((tr - 1.0) * 0.5, -1.0, 1.0);
  const double t = std::acos(cos_t);
  Eigen::Vector3d v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (t < 1e-8) return 0.5 * v;
  if (t > M_PI - 1e-6) {
    // Near pi the off-diagonal difference vanishes; recover the axis from the
    // symmetric part instead.
    Eigen::Matrix3d A = 0.5 * (R + Eigen::Matrix3d::Identity());
    int k = 0;
    A.diagonal().maxCoeff(&k);
    Eigen::Vector3d axis;
    axis[k] = std::sqrt(std::max(A(k, k), 0.0));
    for (int i = 0; i < 3; ++i)
      if (i != k) axis[i] = A(k, i) / axis[k];
    axis.normalize();
    // Fix the sign using the skew part where it is nonzero.
    if (v.dot(axis) < 0) axis = -axis;
    return t * axis;
  }
  return (t / (2.0 * std::sin(t))) * v;
}

struct RigidTransform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return R * p + t; }
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return apply(p); }

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {R * rhs.R, R * rhs.t + t};
  }

  RigidTransform inverse() const {
    const Eigen::Matrix3d Rt = R.transpose();
    return {Rt, -(Rt * t)};
  }

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(R); }

  static RigidTransform from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) {
    return {q.normalized().toRotationMatrix(), t};
  }
};

// Rigid pose plus isotropic scale: world point p = s * R * v + t for a
// canonical point v.
struct ObjectPose {
  RigidTransform g;
  double scale = 1.0;

  Eigen::Vector3d to_world(const Eigen::Vector3d& v) const { return scale * (g.R * v) + g.t; }
  Eigen::Vector3d to_canonical(const Eigen::Vector3d& p) const {
    return g.R.transpose() * (p - g.t) / scale;
  }
};

inline Eigen::Vector3d transform_to_canonical(const ObjectPose& pose, const Eigen::Vector3d& p) {
  return pose.to_canonical(p);
}

// Geodesic rotation distance in radians.
inline double rotation_angle(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb) {
  return so3_log(Ra.transpose() * Rb).norm();
}

}  // namespace objmap
