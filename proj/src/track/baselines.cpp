// SPDX-License-Identifier: Apache-2.0

#include "objmap/track/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <utility>

#include "objmap/core/errors.hpp"
#include "objmap/track/residuals.hpp"
#include "objmap/track/solver.hpp"

namespace objmap {
namespace {

struct IcpAssociation {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> huber;  // sqrt IRLS weights, frozen per round
};

IcpAssociation associate(const std::vector<Eigen::Vector3d>& points_world,
                         const TsdfVolume& volume, const ObjectPose& pose,
                         const IcpConfig& config) {
  IcpAssociation out;
  const double gate = config.gate * volume.truncation();
  for (const auto& p : points_world) {
    const Eigen::Vector3d v = pose.to_canonical(p);
    const auto [t, w] = volume.sample_trilinear(v);
    if (w <= 0.0 || std::abs(t) >= gate) continue;
    const double r = pose.scale * t;
    out.points.push_back(p);
    out.huber.push_back(std::sqrt(huber_weight(r, config.huber)));
  }
  return out;
}

ResidualBlock make_icp_block(std::shared_ptr<PoseCodeState> state, const TsdfVolume& volume,
                             IcpAssociation assoc) {
  ResidualBlock block;
  block.name = "icp";
  block.weight = 1.0;
  block.eval = [state, &volume, assoc = std::move(assoc)](const Eigen::VectorXd& x,
                                                          Eigen::VectorXd& r,
                                                          Eigen::MatrixXd* jac) {
    const int m = static_cast<int>(assoc.points.size());
    const ObjectPose pose = state->pose_at(x);
    r.resize(m);
    if (jac != nullptr) jac->setZero(m, 6);
    for (int i = 0; i < m; ++i) {
      const Eigen::Vector3d& p = assoc.points[static_cast<std::size_t>(i)];
      const Eigen::Vector3d v = pose.to_canonical(p);
      const double t = volume.sample_trilinear(v).first;
      r(i) = assoc.huber[static_cast<std::size_t>(i)] * pose.scale * t;
      if (jac != nullptr) {
        // d(s t)/d[omega, u] = g^T R^T [skew(p) | -I] with g the canonical
        // TSDF gradient; the 1/s of the point map cancels the metric scale.
        const Eigen::Vector3d g = volume.tsdf().contains(v.cast<float>())
                                      ? volume.tsdf().gradient(v)
                                      : Eigen::Vector3d::Zero();
        const Eigen::RowVector3d gr = (pose.g.R * g).transpose();
        jac->row(i).head<3>() =
            assoc.huber[static_cast<std::size_t>(i)] * (gr * skew(p));
        jac->row(i).tail<3>() = -assoc.huber[static_cast<std::size_t>(i)] * gr;
      }
    }
  };
  return block;
}

}  // namespace

RigidTransform icp_point_to_plane(const std::vector<Eigen::Vector3d>& points_world,
                                  const TsdfVolume& volume, const ObjectPose& initial,
                                  const IcpConfig& config) {
  auto state = std::make_shared<PoseCodeState>();
  state->base = initial;
  state->layout.with_scale = false;
  state->layout.code_dim = 0;
  state->code_scale = Eigen::VectorXd();

  OptimizerConfig solver_cfg;
  solver_cfg.max_iters = config.iters_per_round;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
  for (int round = 0; round < config.rounds; ++round) {
    IcpAssociation assoc = associate(points_world, volume, state->base, config);
    if (static_cast<int>(assoc.points.size()) < config.min_points)
      throw InsufficientDataError("icp: " + std::to_string(assoc.points.size()) +
                                  " associated points, need " +
                                  std::to_string(config.min_points));
    GnProblem problem;
    problem.blocks.push_back(make_icp_block(state, volume, std::move(assoc)));
    problem.rebase = make_rebase(state);

    if (round == 0) {
      Eigen::VectorXd r;
      Eigen::MatrixXd jac;
      problem.blocks[0].eval(x, r, &jac);
      const Eigen::Matrix<double, 6, 6> h = jac.transpose() * jac;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(h);
      const double lead = eig.eigenvalues().maxCoeff();
      int unobservable = 0;
      for (int i = 0; i < 6; ++i)
        if (eig.eigenvalues()(i) < config.rank_tol * std::max(lead, 1e-300)) ++unobservable;
      if (unobservable > 0)
        throw DegenerateGeometryError("icp: normal matrix rank deficient", unobservable);
    }

    gauss_newton_solve(problem, x, solver_cfg);
  }
  return state->base.g;
}

namespace {

struct PyramidLevel {
  GrayImage intensity_a;
  GrayImage intensity_b;
  DepthImage depth_a;
  MaskImage mask_a;
  CameraIntrinsics intrinsics;
};

GrayImage box_half(const GrayImage& img) {
  GrayImage out(img.width() / 2, img.height() / 2, 0.f);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      out.at(x, y) = 0.25f * (img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) +
                              img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1));
  return out;
}

template <typename T>
Image<T> stride_half(const Image<T>& img) {
  Image<T> out(img.width() / 2, img.height() / 2, T{});
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = img.at(2 * x, 2 * y);
  return out;
}

CameraIntrinsics half_intrinsics(const CameraIntrinsics& k) {
  CameraIntrinsics out = k;
  out.width = k.width / 2;
  out.height = k.height / 2;
  out.fx = k.fx * 0.5;
  out.fy = k.fy * 0.5;
  out.cx = (k.cx + 0.5) * 0.5 - 0.5;
  out.cy = (k.cy + 0.5) * 0.5 - 0.5;
  return out;
}

}  // namespace

RigidTransform rgbd_vo_photometric(const Frame& frame_a, const Frame& frame_b,
                                   std::uint8_t object_id, const RigidTransform& initial,
                                   const VoConfig& config) {
  // Texture gate on the full-resolution masked region.
  {
    double sum = 0.0, sum2 = 0.0;
    int n = 0;
    for (int y = 0; y < frame_a.intensity.height(); ++y)
      for (int x = 0; x < frame_a.intensity.width(); ++x)
        if (frame_a.mask.at(x, y) == object_id) {
          const double i = frame_a.intensity.at(x, y);
          sum += i;
          sum2 += i * i;
          ++n;
        }
    const double var = n > 1 ? (sum2 - sum * sum / n) / (n - 1) : 0.0;
    if (var < config.min_variance) {
      std::cerr << "rgbd_vo: textureless object region (variance " << var
                << "), motion unobservable; keeping initial pose\n";
      return initial;
    }
  }

  std::vector<PyramidLevel> pyramid(static_cast<std::size_t>(config.levels));
  pyramid[0] = {frame_a.intensity, frame_b.intensity, frame_a.depth, frame_a.mask,
                frame_a.intrinsics};
  for (int l = 1; l < config.levels; ++l) {
    const PyramidLevel& prev = pyramid[static_cast<std::size_t>(l - 1)];
    pyramid[static_cast<std::size_t>(l)] = {box_half(prev.intensity_a), box_half(prev.intensity_b),
                                            stride_half(prev.depth_a), stride_half(prev.mask_a),
                                            half_intrinsics(prev.intrinsics)};
  }

  const RigidTransform cam_a = frame_a.camera_pose;
  const RigidTransform cam_b_inv = frame_b.camera_pose.inverse();
  RigidTransform delta = initial;

  for (int l = config.levels - 1; l >= 0; --l) {
    const PyramidLevel& lv = pyramid[static_cast<std::size_t>(l)];
    auto level_cost = [&](const RigidTransform& d, Eigen::Matrix<double, 6, 6>* h,
                          Eigen::Matrix<double, 6, 1>* g, int* count) {
      double cost = 0.0;
      int used = 0;
      for (int y = 0; y < lv.mask_a.height(); ++y) {
        for (int x = 0; x < lv.mask_a.width(); ++x) {
          if (lv.mask_a.at(x, y) != object_id) continue;
          const double depth = lv.depth_a.at(x, y);
          if (!(depth > 0.0) || !std::isfinite(depth)) continue;
          const Eigen::Vector3d p_w = cam_a.apply(lv.intrinsics.backproject(x, y, depth));
          const Eigen::Vector3d p_wb = d.apply(p_w);
          const Eigen::Vector3d p_cb = cam_b_inv.apply(p_wb);
          if (p_cb.z() <= 1e-6) continue;
          const Eigen::Vector2d px = lv.intrinsics.project(p_cb);
          if (px.x() < 1.0 || px.x() > lv.intrinsics.width - 2.0 || px.y() < 1.0 ||
              px.y() > lv.intrinsics.height - 2.0)
            continue;
          const double r =
              lv.intensity_b.bilinear(px.x(), px.y()) - lv.intensity_a.at(x, y);
          const double w = huber_weight(r, config.huber);
          cost += w * r * r;
          ++used;
          if (h != nullptr) {
            const double gx = 0.5 * (lv.intensity_b.bilinear(px.x() + 1.0, px.y()) -
                                     lv.intensity_b.bilinear(px.x() - 1.0, px.y()));
            const double gy = 0.5 * (lv.intensity_b.bilinear(px.x(), px.y() + 1.0) -
                                     lv.intensity_b.bilinear(px.x(), px.y() - 1.0));
            Eigen::Matrix<double, 2, 3> dpx;
            const double iz = 1.0 / p_cb.z();
            dpx << lv.intrinsics.fx * iz, 0.0, -lv.intrinsics.fx * p_cb.x() * iz * iz, 0.0,
                lv.intrinsics.fy * iz, -lv.intrinsics.fy * p_cb.y() * iz * iz;
            Eigen::Matrix<double, 3, 6> dpw;
            dpw.leftCols<3>() = -skew(p_wb);
            dpw.rightCols<3>().setIdentity();
            const Eigen::Matrix<double, 1, 6> row =
                Eigen::RowVector2d(gx, gy) * dpx * (cam_b_inv.R * dpw);
            *h += w * row.transpose() * row;
            *g += w * row.transpose() * r;
          }
        }
      }
      if (count != nullptr) *count = used;
      return cost;
    };

    for (int it = 0; it < config.iters_per_level; ++it) {
      Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
      Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
      int used = 0;
      const double cost = level_cost(delta, &h, &g, &used);
      if (used < 6) break;
      h.diagonal().array() += 1e-12;
      Eigen::Matrix<double, 6, 1> step = -h.ldlt().solve(g);
      if (!step.allFinite()) break;
      bool accepted = false;
      for (int half = 0; half < 4 && !accepted; ++half) {
        RigidTransform trial;
        trial.R = so3_exp(step.head<3>()) * delta.R;
        trial.t = so3_exp(step.head<3>()) * delta.t + step.tail<3>();
        if (level_cost(trial, nullptr, nullptr, nullptr) < cost) {
          delta = trial;
          accepted = true;
        } else {
          step *= 0.5;
        }
      }
      if (!accepted || step.norm() < 1e-9) break;
    }
  }
  return delta;
}

}  // namespace objmap
