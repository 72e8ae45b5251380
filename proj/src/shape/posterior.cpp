// SPDX-License-Identifier: Apache-2.0

#include "objmap/shape/posterior.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "objmap/core/errors.hpp"

namespace objmap {

double sdf_to_occupancy(double sdf, double sigma, double surface_offset) {
  double unused;
  return sdf_to_occupancy(sdf, sigma, surface_offset, unused);
}

double sdf_to_occupancy(double sdf, double sigma, double surface_offset, double& d_sdf) {
  if (sigma <= 0.0) throw ValidationError("occupancy ramp width must be positive");
  const double raw = surface_offset - sdf / (2.0 * sigma);
  if (raw <= 0.0) {
    d_sdf = 0.0;
    return 0.0;
  }
  if (raw >= 1.0) {
    d_sdf = 0.0;
    return 1.0;
  }
  d_sdf = -1.0 / (2.0 * sigma);
  return raw;
}

PosteriorShapeModel::PosteriorShapeModel(int correction_dim, int correction_res, float lo,
                                         float hi) {
  if (correction_dim < 0 || correction_res < 2) throw ValidationError("bad correction basis size");
  const int r = correction_res;

  // Frequency triples ordered by total frequency, then lexicographically, so
  // the dictionary starts with the smoothest corrections.
  std::vector<std::array<int, 3>> freqs;
  for (int total = 0; static_cast<int>(freqs.size()) < correction_dim && total <= 3 * (r - 1);
       ++total)
    for (int fx = 0; fx <= std::min(total, r - 1); ++fx)
      for (int fy = 0; fy <= std::min(total - fx, r - 1); ++fy) {
        const int fz = total - fx - fy;
        if (fz <= r - 1) freqs.push_back({fx, fy, fz});
      }
  freqs.resize(static_cast<std::size_t>(correction_dim));

  // Orthonormal 1D DCT-II rows.
  std::vector<std::vector<double>> dct(static_cast<std::size_t>(r),
                                       std::vector<double>(static_cast<std::size_t>(r)));
  for (int f = 0; f < r; ++f) {
    const double amp = std::sqrt((f == 0 ? 1.0 : 2.0) / r);
    for (int i = 0; i < r; ++i)
      dct[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)] =
          amp * std::cos(M_PI * (i + 0.5) * f / r);
  }

  basis_.reserve(freqs.size());
  for (const auto& f : freqs) {
    Grid3f g(r, lo, hi);
    for (int k = 0; k < r; ++k)
      for (int j = 0; j < r; ++j)
        for (int i = 0; i < r; ++i)
          g.at(i, j, k) = static_cast<float>(dct[static_cast<std::size_t>(f[0])][static_cast<std::size_t>(i)] *
                                             dct[static_cast<std::size_t>(f[1])][static_cast<std::size_t>(j)] *
                                             dct[static_cast<std::size_t>(f[2])][static_cast<std::size_t>(k)]);
    basis_.push_back(std::move(g));
  }
}

double PosteriorShapeModel::correction(const Eigen::Vector3d& p, const Eigen::VectorXd& z1,
                                       Eigen::Vector3d* d_point, Eigen::VectorXd* d_z1) const {
  if (z1.size() != correction_dim()) throw ValidationError("correction code size mismatch");
  if (basis_.empty()) {
    if (d_point) d_point->setZero();
    if (d_z1) d_z1->resize(0);
    return 0.0;
  }
  const double lo = basis_[0].lo();
  const double hi = basis_[0].hi();
  const Eigen::Vector3d pc = p.cwiseMax(lo).cwiseMin(hi);

  double value = 0.0;
  for (int m = 0; m < correction_dim(); ++m)
    value += z1(m) * basis_[static_cast<std::size_t>(m)].sample(pc);
  if (d_z1) {
    d_z1->resize(correction_dim());
    for (int m = 0; m < correction_dim(); ++m)
      (*d_z1)(m) = basis_[static_cast<std::size_t>(m)].sample(pc);
  }
  if (d_point) {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (int m = 0; m < correction_dim(); ++m)
      g += z1(m) * basis_[static_cast<std::size_t>(m)].gradient(pc);
    for (int a = 0; a < 3; ++a)
      if (p(a) != pc(a)) g(a) = 0.0;
    *d_point = g;
  }
  return value;
}

namespace {

// Confidence gate gamma = smoothstep(clamp(c / tau, 0, 1)). C1 in c because
// smoothstep has zero slope at both ends.
double confidence_gate(double c, double tau, double& d_c) {
  double x = c / tau;
  x = std::clamp(x, 0.0, 1.0);
  d_c = 6.0 * x * (1.0 - x) / tau;
  return x * x * (3.0 - 2.0 * x);
}

}  // namespace

PosteriorEval PosteriorShapeModel::occupancy(const TsdfVolume& volume,
                                             const LatentShapeModel& prior,
                                             const Eigen::Vector3d& p, const Eigen::VectorXd& z0,
                                             const Eigen::VectorXd& z1, bool with_grads) const {
  PosteriorEval ev;

  double t = volume.truncation();
  double w = 0.0;
  Eigen::Vector3d dt_dp = Eigen::Vector3d::Zero();
  Eigen::Vector3d dw_dp = Eigen::Vector3d::Zero();
  if (volume.tsdf().contains(p.cast<float>())) {
    t = volume.tsdf().sample(p);
    w = volume.weight().sample(p);
    if (with_grads) {
      dt_dp = volume.tsdf().gradient(p);
      dw_dp = volume.weight().gradient(p);
    }
  }

  const double cap = volume.weight_cap();
  const double c = std::min(w / cap, 1.0);
  const double dc_dw = w < cap ? 1.0 / cap : 0.0;
  double dgamma_dc = 0.0;
  const double gamma = confidence_gate(c, tau, dgamma_dc);
  ev.gamma = gamma;

  double dmeas_dt = 0.0;
  const double o_meas = sdf_to_occupancy(t, sigma, surface_offset, dmeas_dt);

  Eigen::Vector3d dps_dp;
  Eigen::VectorXd dps_dz0;
  const double ps = prior.sdf(p, z0, with_grads ? &dps_dp : nullptr,
                              with_grads ? &dps_dz0 : nullptr);
  double dpri_dps = 0.0;
  const double o_pri = sdf_to_occupancy(ps, sigma, surface_offset, dpri_dps);

  Eigen::Vector3d dcorr_dp;
  Eigen::VectorXd dcorr_dz1;
  const double corr = correction(p, z1, with_grads ? &dcorr_dp : nullptr,
                                 with_grads ? &dcorr_dz1 : nullptr);

  ev.raw = gamma * o_meas + (1.0 - gamma) * o_pri + corr;
  ev.o = std::clamp(ev.raw, 0.0, 1.0);

  if (with_grads) {
    const bool active = ev.raw > 0.0 && ev.raw < 1.0;
    if (active) {
      ev.d_point = dgamma_dc * dc_dw * (o_meas - o_pri) * dw_dp + gamma * dmeas_dt * dt_dp +
                   (1.0 - gamma) * dpri_dps * dps_dp + dcorr_dp;
      ev.d_z0 = (1.0 - gamma) * dpri_dps * dps_dz0;
      ev.d_z1 = dcorr_dz1;
    } else {
      ev.d_point.setZero();
      ev.d_z0 = Eigen::VectorXd::Zero(z0.size());
      ev.d_z1 = Eigen::VectorXd::Zero(z1.size());
    }
  }
  return ev;
}

double PosteriorShapeModel::completed_sdf(const TsdfVolume& volume, const LatentShapeModel& prior,
                                          const Eigen::Vector3d& p, const Eigen::VectorXd& z0,
                                          const Eigen::VectorXd& z1) const {
  const auto [t, w] = volume.sample_trilinear(p);
  const double c = std::min(w / volume.weight_cap(), 1.0);
  double unused;
  const double gamma = confidence_gate(c, tau, unused);
  const double ps = prior.sdf(p, z0);
  return gamma * t + (1.0 - gamma) * ps - 2.0 * sigma * correction(p, z1);
}

}  // namespace objmap
