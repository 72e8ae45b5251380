// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace objmap {

// Cubic lattice of res^3 node samples spanning [lo, hi]^3 inclusive.
// Node (i,j,k) sits at lo + h*(i,j,k) with h = (hi - lo) / (res - 1).
// Storage is x-fastest: idx = i + res*(j + res*k).
class Grid3f {
 public:
  Grid3f() = default;
  Grid3f(int res, float lo, float hi, float fill = 0.f)
      : res_(res), lo_(lo), hi_(hi), data_(static_cast<std::size_t>(res) * res * res, fill) {}

  int resolution() const { return res_; }
  float lo() const { return lo_; }
  float hi() const { return hi_; }
  float spacing() const { return (hi_ - lo_) / static_cast<float>(res_ - 1); }
  std::size_t size() const { return data_.size(); }

  float& operator[](std::size_t idx) { return data_[idx]; }
  float operator[](std::size_t idx) const { return data_[idx]; }
  float& at(int i, int j, int k) { return data_[index(i, j, k)]; }
  float at(int i, int j, int k) const { return data_[index(i, j, k)]; }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(res_) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(res_) * k);
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  double spacing_d() const {
    return (static_cast<double>(hi_) - static_cast<double>(lo_)) / (res_ - 1);
  }

  Eigen::Vector3f node_position(int i, int j, int k) const {
    const float h = spacing();
    return Eigen::Vector3f(lo_ + h * i, lo_ + h * j, lo_ + h * k);
  }

  Eigen::Vector3d node_position_d(int i, int j, int k) const {
    const double h = spacing_d();
    const double lo = lo_;
    return Eigen::Vector3d(lo + h * i, lo + h * j, lo + h * k);
  }

  bool contains(const Eigen::Vector3f& p) const {
    return p.x() >= lo_ && p.x() <= hi_ && p.y() >= lo_ && p.y() <= hi_ && p.z() >= lo_ &&
           p.z() <= hi_;
  }

  // Trilinear interpolation at p. Caller checks contains(); points slightly
  // outside are clamped to the boundary cell.
  float sample(const Eigen::Vector3f& p) const {
    int i0, j0, k0;
    float fx, fy, fz;
    locate(p, i0, j0, k0, fx, fy, fz);
    return lerp_cell(i0, j0, k0, fx, fy, fz);
  }

  // Analytic gradient of the trilinear interpolant (constant per cell along
  // each axis, linear in the other two).
  Eigen::Vector3f gradient(const Eigen::Vector3f& p) const {
    int i0, j0, k0;
    float fx, fy, fz;
    locate(p, i0, j0, k0, fx, fy, fz);
    const float c000 = at(i0, j0, k0), c100 = at(i0 + 1, j0, k0);
    const float c010 = at(i0, j0 + 1, k0), c110 = at(i0 + 1, j0 + 1, k0);
    const float c001 = at(i0, j0, k0 + 1), c101 = at(i0 + 1, j0, k0 + 1);
    const float c011 = at(i0, j0 + 1, k0 + 1), c111 = at(i0 + 1, j0 + 1, k0 + 1);
    const float inv_h = 1.f / spacing();
    Eigen::Vector3f g;
    g.x() = ((c100 - c000) * (1 - fy) + (c110 - c010) * fy) * (1 - fz) +
            ((c101 - c001) * (1 - fy) + (c111 - c011) * fy) * fz;
    g.y() = ((c010 - c000) * (1 - fx) + (c110 - c100) * fx) * (1 - fz) +
            ((c011 - c001) * (1 - fx) + (c111 - c101) * fx) * fz;
    g.z() = ((c001 - c000) * (1 - fx) + (c101 - c100) * fx) * (1 - fy) +
            ((c011 - c010) * (1 - fx) + (c111 - c110) * fx) * fy;
    return g * inv_h;
  }

  void sample_with_gradient(const Eigen::Vector3f& p, float& value, Eigen::Vector3f& grad) const {
    value = sample(p);
    grad = gradient(p);
  }

  // Double-precision interpolation over the same float storage. Optimization
  // residuals differentiate this path, so the arithmetic must stay smooth to
  // machine precision rather than float roundoff.
  double sample(const Eigen::Vector3d& p) const {
    int i0, j0, k0;
    double fx, fy, fz;
    locate_d(p, i0, j0, k0, fx, fy, fz);
    double c[8];
    corners(i0, j0, k0, c);
    const double c00 = c[0] * (1 - fx) + c[1] * fx;
    const double c10 = c[2] * (1 - fx) + c[3] * fx;
    const double c01 = c[4] * (1 - fx) + c[5] * fx;
    const double c11 = c[6] * (1 - fx) + c[7] * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
  }

  Eigen::Vector3d gradient(const Eigen::Vector3d& p) const {
    int i0, j0, k0;
    double fx, fy, fz;
    locate_d(p, i0, j0, k0, fx, fy, fz);
    double c[8];
    corners(i0, j0, k0, c);
    const double inv_h = 1.0 / static_cast<double>(spacing());
    Eigen::Vector3d g;
    g.x() = ((c[1] - c[0]) * (1 - fy) + (c[3] - c[2]) * fy) * (1 - fz) +
            ((c[5] - c[4]) * (1 - fy) + (c[7] - c[6]) * fy) * fz;
    g.y() = ((c[2] - c[0]) * (1 - fx) + (c[3] - c[1]) * fx) * (1 - fz) +
            ((c[6] - c[4]) * (1 - fx) + (c[7] - c[5]) * fx) * fz;
    g.z() = ((c[4] - c[0]) * (1 - fx) + (c[5] - c[1]) * fx) * (1 - fy) +
            ((c[6] - c[2]) * (1 - fx) + (c[7] - c[3]) * fx) * fy;
    return g * inv_h;
  }

 private:
  void locate(const Eigen::Vector3f& p, int& i0, int& j0, int& k0, float& fx, float& fy,
              float& fz) const {
    const float inv_h = 1.f / spacing();
    auto axis = [&](float v, int& i, float& f) {
      float u = (v - lo_) * inv_h;
      if (u < 0) u = 0;
      const float u_max = static_cast<float>(res_ - 1);
      if (u > u_max) u = u_max;
      i = static_cast<int>(u);
      if (i > res_ - 2) i = res_ - 2;
      f = u - static_cast<float>(i);
    };
    axis(p.x(), i0, fx);
    axis(p.y(), j0, fy);
    axis(p.z(), k0, fz);
  }

  void locate_d(const Eigen::Vector3d& p, int& i0, int& j0, int& k0, double& fx, double& fy,
                double& fz) const {
    const double inv_h = 1.0 / spacing_d();
    const double lo = static_cast<double>(lo_);
    auto axis = [&](double v, int& i, double& f) {
      double u = (v - lo) * inv_h;
      if (u < 0) u = 0;
      const double u_max = static_cast<double>(res_ - 1);
      if (u > u_max) u = u_max;
      i = static_cast<int>(u);
      if (i > res_ - 2) i = res_ - 2;
      f = u - static_cast<double>(i);
    };
    axis(p.x(), i0, fx);
    axis(p.y(), j0, fy);
    axis(p.z(), k0, fz);
  }

  void corners(int i0, int j0, int k0, double c[8]) const {
    c[0] = at(i0, j0, k0);
    c[1] = at(i0 + 1, j0, k0);
    c[2] = at(i0, j0 + 1, k0);
    c[3] = at(i0 + 1, j0 + 1, k0);
    c[4] = at(i0, j0, k0 + 1);
    c[5] = at(i0 + 1, j0, k0 + 1);
    c[6] = at(i0, j0 + 1, k0 + 1);
    c[7] = at(i0 + 1, j0 + 1, k0 + 1);
  }

  float lerp_cell(int i0, int j0, int k0, float fx, float fy, float fz) const {
    const float c000 = at(i0, j0, k0), c100 = at(i0 + 1, j0, k0);
    const float c010 = at(i0, j0 + 1, k0), c110 = at(i0 + 1, j0 + 1, k0);
    const float c001 = at(i0, j0, k0 + 1), c101 = at(i0 + 1, j0, k0 + 1);
    const float c011 = at(i0, j0 + 1, k0 + 1), c111 = at(i0 + 1, j0 + 1, k0 + 1);
    const float c00 = c000 * (1 - fx) + c100 * fx;
    const float c10 = c010 * (1 - fx) + c110 * fx;
    const float c01 = c001 * (1 - fx) + c101 * fx;
    const float c11 = c011 * (1 - fx) + c111 * fx;
    const float c0 = c00 * (1 - fy) + c10 * fy;
    const float c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
  }

  int res_ = 0;
  float lo_ = -1.f, hi_ = 1.f;
  std::vector<float> data_;
};

}  // namespace objmap
