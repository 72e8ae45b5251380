// SPDX-License-Identifier: Apache-2.0

#include "objmap/track/residuals.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "objmap/core/errors.hpp"
#include "objmap/render/render.hpp"

namespace objmap {
namespace {

constexpr double kMissMass = 0.1;
constexpr double kOccEps = 1e-6;

// Pose derivative context at a rebased state (zero increment); maps a
// canonical gradient to the rotation/translation/log-scale entries of a row.
struct PoseJac {
  Eigen::Matrix3d rt_over_s;
  const ObjectPose* pose;

  explicit PoseJac(const ObjectPose& p) : pose(&p) {
    rt_over_s = p.g.R.transpose() / p.scale;
  }
  void fill(Eigen::Ref<Eigen::RowVectorXd> row, const Eigen::Vector3d& point_world,
            const Eigen::Vector3d& canonical, const Eigen::Vector3d& d_canonical,
            const ParamLayout& layout) const {
    const Eigen::Matrix3d d_rot = rt_over_s * skew(point_world);
    row.segment<3>(0) = d_canonical.transpose() * d_rot;
    row.segment<3>(3) = -(d_canonical.transpose() * rt_over_s);
    if (layout.with_scale) row(layout.scale_index()) = -d_canonical.dot(canonical);
  }
};

void fill_code(Eigen::Ref<Eigen::RowVectorXd> row, const Eigen::VectorXd& d_model_code,
               const PoseCodeState& st) {
  const int off = st.layout.code_offset();
  for (int k = 0; k < st.layout.code_dim; ++k)
    row(off + k) = d_model_code(k) * st.code_scale(k);
}

// One ray of the differentiable-render residual. Occupancy evaluation is a
// callback so the prior and posterior flavors share the transmittance math.
template <typename OccFn>
double render_ray_residual(const RenderRay& ray, const ObjectPose& pose, OccFn&& occ_at,
                           const PoseCodeState& st, Eigen::RowVectorXd* row) {
  const int n = static_cast<int>(ray.sample_depths.size());
  std::vector<double> occ(static_cast<std::size_t>(n));
  std::vector<Eigen::Vector3d> pts(static_cast<std::size_t>(n));
  std::vector<Eigen::Vector3d> cans(static_cast<std::size_t>(n));
  std::vector<Eigen::Vector3d> d_pts(static_cast<std::size_t>(n));
  Eigen::MatrixXd d_codes;
  if (row != nullptr && st.layout.code_dim > 0)
    d_codes.setZero(n, st.layout.code_dim);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d pw = ray.origin + ray.sample_depths[static_cast<std::size_t>(i)] * ray.direction;
    const Eigen::Vector3d v = pose.to_canonical(pw);
    Eigen::Vector3d dp = Eigen::Vector3d::Zero();
    Eigen::VectorXd dz;
    occ[static_cast<std::size_t>(i)] =
        occ_at(v, row != nullptr ? &dp : nullptr, row != nullptr ? &dz : nullptr);
    pts[static_cast<std::size_t>(i)] = pw;
    cans[static_cast<std::size_t>(i)] = v;
    d_pts[static_cast<std::size_t>(i)] = dp;
    if (row != nullptr && st.layout.code_dim > 0) d_codes.row(i) = dz.transpose();
  }
  const RenderResult rr =
      render_depth_differentiable(ray.sample_depths, occ, row != nullptr);
  if (row != nullptr) row->setZero();
  if (rr.mass < kMissMass) {
    // Free space along the ray: pull toward the box exit, constant in the
    // parameters so it only contributes a cost floor.
    return ray.huber * (ray.far_depth - ray.measured_depth);
  }
  if (row != nullptr) {
    const PoseJac pj(pose);
    Eigen::RowVectorXd sample_row(st.layout.dim());
    for (int i = 0; i < n; ++i) {
      const double dd = rr.d_depth_do[static_cast<std::size_t>(i)];
      if (dd == 0.0 && d_codes.size() == 0) continue;
      sample_row.setZero();
      pj.fill(sample_row, pts[static_cast<std::size_t>(i)], cans[static_cast<std::size_t>(i)],
              d_pts[static_cast<std::size_t>(i)], st.layout);
      if (st.layout.code_dim > 0) {
        const int off = st.layout.code_offset();
        for (int k = 0; k < st.layout.code_dim; ++k)
          sample_row(off + k) = d_codes(i, k) * st.code_scale(k);
      }
      row->noalias() += (ray.huber * dd) * sample_row;
    }
  }
  return ray.huber * (rr.depth - ray.measured_depth);
}

}  // namespace

ObjectPose PoseCodeState::apply_increment(const ObjectPose& base, const Eigen::Vector3d& rot,
                                          const Eigen::Vector3d& trans, double log_scale) {
  ObjectPose out = base;
  const Eigen::Matrix3d dr = so3_exp(rot);
  out.g.R = dr * base.g.R;
  out.g.t = dr * base.g.t + trans;
  out.scale = base.scale * std::exp(log_scale);
  return out;
}

ObjectPose PoseCodeState::pose_at(const Eigen::VectorXd& x) const {
  const double ls = layout.with_scale ? x(layout.scale_index()) : 0.0;
  return apply_increment(base, x.segment<3>(0), x.segment<3>(3), ls);
}

Eigen::VectorXd PoseCodeState::model_code_at(const Eigen::VectorXd& x) const {
  return code_scale.cwiseProduct(x.segment(layout.code_offset(), layout.code_dim));
}

std::function<Eigen::VectorXd(const Eigen::VectorXd&)> make_rebase(
    std::shared_ptr<PoseCodeState> state) {
  return [state](const Eigen::VectorXd& x) {
    state->base = state->pose_at(x);
    Eigen::VectorXd out = x;
    out.segment<3>(0).setZero();
    out.segment<3>(3).setZero();
    if (state->layout.with_scale) out(state->layout.scale_index()) = 0.0;
    return out;
  };
}

double huber_weight(double residual, double delta) {
  const double a = std::abs(residual);
  return a <= delta ? 1.0 : delta / a;
}

double binary_cross_entropy(double predicted, double target, double eps) {
  const double o = std::clamp(predicted, eps, 1.0 - eps);
  return -(target * std::log(o) + (1.0 - target) * std::log1p(-o));
}

ResidualBlock make_sdf_block(std::shared_ptr<PoseCodeState> state, const LatentShapeModel& prior,
                             std::vector<Eigen::Vector3d> points_world,
                             const Eigen::VectorXd& x0, double sigma, double weight) {
  const int n = static_cast<int>(points_world.size());
  const double delta = 3.0 * sigma;
  Eigen::VectorXd hw(n);
  {
    const ObjectPose pose0 = state->pose_at(x0);
    const Eigen::VectorXd z0 = state->model_code_at(x0);
    for (int i = 0; i < n; ++i) {
      const double r = prior.sdf(pose0.to_canonical(points_world[static_cast<std::size_t>(i)]), z0);
      hw(i) = std::sqrt(huber_weight(r, delta));
    }
  }
  ResidualBlock block;
  block.name = "sdf";
  block.weight = weight;
  block.eval = [state, &prior, pts = std::move(points_world), hw](
                   const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const int m = static_cast<int>(pts.size());
    const ObjectPose pose = state->pose_at(x);
    const Eigen::VectorXd z = state->model_code_at(x);
    r.resize(m);
    if (jac != nullptr) jac->setZero(m, state->layout.dim());
    const PoseJac pj(pose);
    Eigen::Vector3d dv;
    Eigen::VectorXd dz;
    for (int i = 0; i < m; ++i) {
      const Eigen::Vector3d v = pose.to_canonical(pts[static_cast<std::size_t>(i)]);
      const double s = prior.sdf(v, z, jac != nullptr ? &dv : nullptr,
                                 jac != nullptr ? &dz : nullptr);
      r(i) = hw(i) * s;
      if (jac != nullptr) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(state->layout.dim());
        pj.fill(row, pts[static_cast<std::size_t>(i)], v, dv, state->layout);
        fill_code(row, dz, *state);
        jac->row(i) = hw(i) * row;
      }
    }
  };
  return block;
}

ResidualBlock make_render_block_prior(std::shared_ptr<PoseCodeState> state,
                                      const LatentShapeModel& prior, std::vector<RenderRay> rays,
                                      const Eigen::VectorXd& x0, double sigma, double weight) {
  auto occ_fn = [state, &prior, sigma](const Eigen::VectorXd& x) {
    const Eigen::VectorXd z = state->model_code_at(x);
    return [&prior, sigma, z](const Eigen::Vector3d& v, Eigen::Vector3d* dp, Eigen::VectorXd* dz) {
      Eigen::Vector3d ds;
      Eigen::VectorXd dsz;
      const double s = prior.sdf(v, z, dp != nullptr ? &ds : nullptr,
                                 dz != nullptr ? &dsz : nullptr);
      double d_occ = 0.0;
      const double o = sdf_to_occupancy(s, sigma, 0.0, d_occ);
      if (dp != nullptr) *dp = d_occ * ds;
      if (dz != nullptr) *dz = d_occ * dsz;
      return o;
    };
  };
  // Freeze Huber weights from the residuals at the build state.
  {
    const ObjectPose pose0 = state->pose_at(x0);
    const double delta = 3.0 * sigma * pose0.scale;
    auto occ0 = occ_fn(x0);
    for (auto& ray : rays) {
      ray.huber = 1.0;
      const double r = render_ray_residual(ray, pose0, occ0, *state, nullptr);
      ray.huber = std::sqrt(huber_weight(r, delta));
    }
  }
  ResidualBlock block;
  block.name = "render";
  block.weight = weight;
  block.eval = [state, occ_fn, rays = std::move(rays)](const Eigen::VectorXd& x,
                                                       Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const int m = static_cast<int>(rays.size());
    const ObjectPose pose = state->pose_at(x);
    auto occ = occ_fn(x);
    r.resize(m);
    if (jac != nullptr) jac->setZero(m, state->layout.dim());
    Eigen::RowVectorXd row(state->layout.dim());
    for (int i = 0; i < m; ++i) {
      r(i) = render_ray_residual(rays[static_cast<std::size_t>(i)], pose, occ, *state,
                                 jac != nullptr ? &row : nullptr);
      if (jac != nullptr) jac->row(i) = row;
    }
  };
  return block;
}

ResidualBlock make_render_block_posterior(std::shared_ptr<PoseCodeState> state,
                                          const TsdfVolume& volume,
                                          const LatentShapeModel& prior,
                                          const PosteriorShapeModel& posterior,
                                          Eigen::VectorXd z0_frozen, std::vector<RenderRay> rays,
                                          const Eigen::VectorXd& x0, double sigma, double weight) {
  auto occ_fn = [state, &volume, &prior, &posterior, z0 = std::move(z0_frozen)](
                    const Eigen::VectorXd& x) {
    const Eigen::VectorXd z1 = state->model_code_at(x);
    return [&volume, &prior, &posterior, z0, z1](const Eigen::Vector3d& v, Eigen::Vector3d* dp,
                                                 Eigen::VectorXd* dz) {
      const PosteriorEval ev =
          posterior.occupancy(volume, prior, v, z0, z1, dp != nullptr || dz != nullptr);
      if (dp != nullptr) *dp = ev.d_point;
      if (dz != nullptr) *dz = ev.d_z1;
      return ev.o;
    };
  };
  {
    const ObjectPose pose0 = state->pose_at(x0);
    const double delta = 3.0 * sigma * pose0.scale;
    auto occ0 = occ_fn(x0);
    for (auto& ray : rays) {
      ray.huber = 1.0;
      const double r = render_ray_residual(ray, pose0, occ0, *state, nullptr);
      ray.huber = std::sqrt(huber_weight(r, delta));
    }
  }
  ResidualBlock block;
  block.name = "render";
  block.weight = weight;
  block.eval = [state, occ_fn, rays = std::move(rays)](const Eigen::VectorXd& x,
                                                       Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const int m = static_cast<int>(rays.size());
    const ObjectPose pose = state->pose_at(x);
    auto occ = occ_fn(x);
    r.resize(m);
    if (jac != nullptr) jac->setZero(m, state->layout.dim());
    Eigen::RowVectorXd row(state->layout.dim());
    for (int i = 0; i < m; ++i) {
      r(i) = render_ray_residual(rays[static_cast<std::size_t>(i)], pose, occ, *state,
                                 jac != nullptr ? &row : nullptr);
      if (jac != nullptr) jac->row(i) = row;
    }
  };
  return block;
}

ResidualBlock make_occ_block(std::shared_ptr<PoseCodeState> state, const TsdfVolume& volume,
                             const LatentShapeModel& prior, const PosteriorShapeModel& posterior,
                             Eigen::VectorXd z0_frozen, std::vector<OccSample> samples,
                             const Eigen::VectorXd& x0, double weight) {
  Eigen::VectorXd z0 = std::move(z0_frozen);
  // Fisher scoring: freeze the curvature weight q = 1/sqrt(o (1-o)) at the
  // build state so the quadratic surrogate matches the cross-entropy there.
  {
    const ObjectPose pose0 = state->pose_at(x0);
    const Eigen::VectorXd z1 = state->model_code_at(x0);
    for (auto& s : samples) {
      const PosteriorEval ev =
          posterior.occupancy(volume, prior, pose0.to_canonical(s.point_world), z0, z1, false);
      const double o = std::clamp(ev.o, kOccEps, 1.0 - kOccEps);
      s.q = 1.0 / std::sqrt(o * (1.0 - o));
    }
  }
  ResidualBlock block;
  block.name = "occ";
  block.weight = weight;
  block.eval = [state, &volume, &prior, &posterior, z0, samples = std::move(samples)](
                   const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const int m = static_cast<int>(samples.size());
    const ObjectPose pose = state->pose_at(x);
    const Eigen::VectorXd z1 = state->model_code_at(x);
    r.resize(m);
    if (jac != nullptr) jac->setZero(m, state->layout.dim());
    const PoseJac pj(pose);
    for (int i = 0; i < m; ++i) {
      const OccSample& s = samples[static_cast<std::size_t>(i)];
      const Eigen::Vector3d v = pose.to_canonical(s.point_world);
      const PosteriorEval ev = posterior.occupancy(volume, prior, v, z0, z1, jac != nullptr);
      const bool interior = ev.o > kOccEps && ev.o < 1.0 - kOccEps;
      r(i) = s.q * (ev.o - s.target);
      if (jac != nullptr) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(state->layout.dim());
        if (interior) {
          pj.fill(row, s.point_world, v, ev.d_point, state->layout);
          fill_code(row, ev.d_z1, *state);
        }
        jac->row(i) = s.q * row;
      }
    }
  };
  return block;
}

ResidualBlock make_code_reg_block(ParamLayout layout, double weight) {
  ResidualBlock block;
  block.name = "reg";
  block.weight = weight;
  block.eval = [layout](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    r = x.segment(layout.code_offset(), layout.code_dim);
    if (jac != nullptr) {
      jac->setZero(layout.code_dim, layout.dim());
      jac->block(0, layout.code_offset(), layout.code_dim, layout.code_dim)
          .setIdentity();
    }
  };
  return block;
}

}  // namespace objmap
