// SPDX-License-Identifier: Apache-2.0

#include "objmap/track/correspondence.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "objmap/core/errors.hpp"

namespace objmap {

CorrespondenceSet predict_correspondences(const DepthImage& depth, const MaskImage& mask,
                                          std::uint8_t object_id,
                                          const CameraIntrinsics& intrinsics,
                                          const RigidTransform& camera_pose,
                                          const ObjectPose& gt_object_pose,
                                          const NoiseModel& noise, Rng& rng, int max_points) {
  std::vector<Eigen::Vector2i> pixels;
  for (int v = 0; v < depth.height(); ++v)
    for (int u = 0; u < depth.width(); ++u)
      if (mask.at(u, v) == object_id && depth.at(u, v) > 0.f) pixels.emplace_back(u, v);
  if (pixels.empty()) throw InsufficientDataError("no masked depth pixels for correspondences");

  const std::size_t stride =
      1 + (pixels.size() - 1) / static_cast<std::size_t>(std::max(1, max_points));

  CorrespondenceSet out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni01(0.0, 1.0);
  std::uniform_real_distribution<double> uni_canonical(-1.0, 1.0);
  for (std::size_t i = 0; i < pixels.size(); i += stride) {
    const int u = pixels[i].x();
    const int v = pixels[i].y();
    const Eigen::Vector3d p_cam =
        intrinsics.backproject(u, v, static_cast<double>(depth.at(u, v)));
    const Eigen::Vector3d v_true = gt_object_pose.to_canonical(camera_pose.apply(p_cam));

    const bool outlier = uni01(rng) < noise.corr_outlier_rate;
    Eigen::Vector3d v_pred;
    double confidence;
    if (outlier) {
      v_pred = Eigen::Vector3d(uni_canonical(rng), uni_canonical(rng), uni_canonical(rng));
      confidence = 0.0;
    } else {
      v_pred = v_true;
      if (noise.corr_std > 0.0)
        v_pred += noise.corr_std * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
      confidence = 1.0;
    }
    if (noise.confidence_noise_std > 0.0) confidence += noise.confidence_noise_std * gauss(rng);

    out.camera_points.push_back(p_cam);
    out.canonical_points.push_back(v_pred);
    out.confidences.push_back(std::clamp(confidence, 0.0, 1.0));
  }
  return out;
}

ObjectPose umeyama_align(const CorrespondenceSet& correspondences) {
  const std::size_t n = correspondences.size();
  if (correspondences.canonical_points.size() != n || correspondences.confidences.size() != n)
    throw ValidationError("correspondence arrays disagree in length");

  double weight_sum = 0.0;
  Eigen::Vector3d mean_cam = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_can = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = correspondences.confidences[i];
    weight_sum += w;
    mean_cam += w * correspondences.camera_points[i];
    mean_can += w * correspondences.canonical_points[i];
  }
  if (weight_sum <= 1e-12)
    throw DegenerateGeometryError("correspondences carry no weight", 7);
  mean_cam /= weight_sum;
  mean_can /= weight_sum;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double var_can = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = correspondences.confidences[i];
    const Eigen::Vector3d dc = correspondences.camera_points[i] - mean_cam;
    const Eigen::Vector3d dn = correspondences.canonical_points[i] - mean_can;
    cov += w * dc * dn.transpose();
    var_can += w * dn.squaredNorm();
  }
  cov /= weight_sum;
  var_can /= weight_sum;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d d = svd.singularValues();
  if (d(0) <= 1e-12)
    throw DegenerateGeometryError("coincident correspondence support", 3);
  if (d(1) <= 1e-12 + 1e-9 * d(0))
    throw DegenerateGeometryError("collinear correspondence support", 1);

  Eigen::Vector3d s_diag = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s_diag(2) = -1.0;

  ObjectPose pose;
  pose.g.R = svd.matrixU() * s_diag.asDiagonal() * svd.matrixV().transpose();
  pose.scale = d.dot(s_diag) / var_can;
  if (!(pose.scale > 0.0))
    throw DegenerateGeometryError("non-positive scale from alignment", 1);
  pose.g.t = mean_cam - pose.scale * (pose.g.R * mean_can);
  return pose;
}

}  // namespace objmap
