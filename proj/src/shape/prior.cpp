// SPDX-License-Identifier: Apache-2.0

#include "objmap/shape/prior.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "objmap/core/errors.hpp"
#include "objmap/core/rng.hpp"

namespace objmap {

namespace {

double dot_grids(const Grid3f& a, const Grid3f& b) {
  double s = 0.0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t v = 0; v < da.size(); ++v) s += static_cast<double>(da[v]) * db[v];
  return s;
}

}  // namespace

Grid3f sample_field(const ScalarField& field, int resolution, float lo, float hi) {
  Grid3f g(resolution, lo, hi);
  for (int k = 0; k < resolution; ++k)
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i)
        g.at(i, j, k) = static_cast<float>(field(g.node_position_d(i, j, k)));
  return g;
}

LatentShapeModel LatentShapeModel::build(const std::vector<ScalarField>& shapes, int latent_dim,
                                         int resolution, float lo, float hi) {
  if (shapes.empty()) throw InsufficientDataError("shape prior needs at least one training shape");
  if (latent_dim < 0 || resolution < 2) throw ValidationError("bad prior dimensions");

  const int n = static_cast<int>(shapes.size());
  const std::size_t voxels =
      static_cast<std::size_t>(resolution) * resolution * resolution;

  LatentShapeModel model;
  model.mean_ = Grid3f(resolution, lo, hi);

  // Training grids, then centered in place.
  std::vector<Grid3f> data;
  data.reserve(static_cast<std::size_t>(n));
  for (const auto& s : shapes) data.push_back(sample_field(s, resolution, lo, hi));

  std::vector<double> mean(voxels, 0.0);
  for (const auto& g : data)
    for (std::size_t v = 0; v < voxels; ++v) mean[v] += g[v];
  for (std::size_t v = 0; v < voxels; ++v) {
    mean[v] /= n;
    model.mean_[v] = static_cast<float>(mean[v]);
  }
  for (auto& g : data)
    for (std::size_t v = 0; v < voxels; ++v)
      g[v] = static_cast<float>(static_cast<double>(g[v]) - mean[v]);

  // Gram-matrix PCA: eigenvectors of A^T A give the principal directions
  // without ever forming the voxel-space covariance.
  Eigen::MatrixXd gram(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      const double s = dot_grids(data[static_cast<std::size_t>(a)], data[static_cast<std::size_t>(b)]);
      gram(a, b) = s;
      gram(b, a) = s;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success) throw ValidationError("prior eigendecomposition failed");

  const double lambda_max = std::max(es.eigenvalues().maxCoeff(), 0.0);
  const double rank_tol = std::max(lambda_max * 1e-10, 1e-12);

  model.basis_.reserve(static_cast<std::size_t>(latent_dim));
  model.sigma_ = Eigen::VectorXd::Zero(latent_dim);
  int k = 0;
  for (int e = n - 1; e >= 0 && k < latent_dim; --e) {
    const double lambda = es.eigenvalues()(e);
    if (lambda <= rank_tol) break;
    Grid3f b(resolution, lo, hi);
    const double inv_s = 1.0 / std::sqrt(lambda);
    for (std::size_t v = 0; v < voxels; ++v) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a) acc += es.eigenvectors()(a, e) * data[static_cast<std::size_t>(a)][v];
      b[v] = static_cast<float>(acc * inv_s);
    }
    model.basis_.push_back(std::move(b));
    model.sigma_(k) = std::sqrt(lambda / std::max(n - 1, 1));
    ++k;
  }

  // Data rank exhausted: pad with deterministic orthonormal filler directions
  // carrying zero variance, so downstream code can rely on latent_dim.
  model.padded_ = latent_dim - k;
  auto rng = make_rng(substream(0x70726961u, static_cast<std::uint64_t>(resolution)));
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (k < latent_dim) {
    Grid3f b(resolution, lo, hi);
    for (std::size_t v = 0; v < voxels; ++v) b[v] = static_cast<float>(gauss(rng));
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& prev : model.basis_) {
        const double d = dot_grids(b, prev);
        for (std::size_t v = 0; v < voxels; ++v)
          b[v] = static_cast<float>(static_cast<double>(b[v]) - d * prev[v]);
      }
      const double norm = std::sqrt(dot_grids(b, b));
      for (std::size_t v = 0; v < voxels; ++v) b[v] = static_cast<float>(b[v] / norm);
    }
    model.basis_.push_back(std::move(b));
    model.sigma_(k) = 0.0;
    ++k;
  }
  return model;
}

Grid3f LatentShapeModel::decode(const Eigen::VectorXd& z0) const {
  if (z0.size() != latent_dim()) throw ValidationError("latent code size mismatch");
  Grid3f out = mean_;
  for (std::size_t v = 0; v < out.size(); ++v) {
    double acc = out[v];
    for (int k = 0; k < latent_dim(); ++k) acc += z0(k) * basis_[static_cast<std::size_t>(k)][v];
    out[v] = static_cast<float>(acc);
  }
  return out;
}

Eigen::VectorXd LatentShapeModel::project(const ScalarField& shape) const {
  return project_grid(sample_field(shape, resolution(), lo(), hi()));
}

Eigen::VectorXd LatentShapeModel::project_grid(const Grid3f& grid) const {
  if (grid.resolution() != resolution()) throw ValidationError("grid resolution mismatch");
  Eigen::VectorXd z(latent_dim());
  for (int k = 0; k < latent_dim(); ++k) {
    const Grid3f& b = basis_[static_cast<std::size_t>(k)];
    double acc = 0.0;
    for (std::size_t v = 0; v < grid.size(); ++v)
      acc += (static_cast<double>(grid[v]) - mean_[v]) * b[v];
    z(k) = acc;
  }
  return z;
}

double LatentShapeModel::sdf(const Eigen::Vector3d& p, const Eigen::VectorXd& z0,
                             Eigen::Vector3d* d_point, Eigen::VectorXd* d_z0) const {
  if (z0.size() != latent_dim()) throw ValidationError("latent code size mismatch");
  const double lo = mean_.lo();
  const double hi = mean_.hi();
  Eigen::Vector3d pc = p.cwiseMax(lo).cwiseMin(hi);
  const Eigen::Vector3d out = p - pc;
  const double dist = out.norm();

  double value = mean_.sample(pc);
  for (int k = 0; k < latent_dim(); ++k)
    value += z0(k) * basis_[static_cast<std::size_t>(k)].sample(pc);
  value += dist;

  if (d_z0) {
    d_z0->resize(latent_dim());
    for (int k = 0; k < latent_dim(); ++k)
      (*d_z0)(k) = basis_[static_cast<std::size_t>(k)].sample(pc);
  }
  if (d_point) {
    Eigen::Vector3d g = mean_.gradient(pc);
    for (int k = 0; k < latent_dim(); ++k)
      g += z0(k) * basis_[static_cast<std::size_t>(k)].gradient(pc);
    if (dist > 0.0) {
      // Clamped axes stop feeling the field; the distance term takes over.
      for (int a = 0; a < 3; ++a)
        if (out(a) != 0.0) g(a) = 0.0;
      g += out / dist;
    }
    *d_point = g;
  }
  return value;
}

void LatentShapeModel::save(const std::filesystem::path& path) const {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw ValidationError("cannot write " + path.string());
  const std::uint8_t version = 1;
  const std::uint32_t k = static_cast<std::uint32_t>(latent_dim());
  const std::uint32_t res = static_cast<std::uint32_t>(resolution());
  const float extent[6] = {mean_.lo(), mean_.lo(), mean_.lo(), mean_.hi(), mean_.hi(), mean_.hi()};
  outf.write(reinterpret_cast<const char*>(&version), sizeof(version));
  outf.write(reinterpret_cast<const char*>(&k), sizeof(k));
  outf.write(reinterpret_cast<const char*>(&res), sizeof(res));
  outf.write(reinterpret_cast<const char*>(extent), sizeof(extent));
  outf.write(reinterpret_cast<const char*>(mean_.data().data()),
             static_cast<std::streamsize>(mean_.size() * sizeof(float)));
  for (const auto& b : basis_)
    outf.write(reinterpret_cast<const char*>(b.data().data()),
               static_cast<std::streamsize>(b.size() * sizeof(float)));
  for (int i = 0; i < latent_dim(); ++i) {
    const float s = static_cast<float>(sigma_(i));
    outf.write(reinterpret_cast<const char*>(&s), sizeof(s));
  }
  if (!outf) throw ValidationError("short write to " + path.string());
}

LatentShapeModel LatentShapeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::uint8_t version = 0;
  std::uint32_t k = 0, res = 0;
  float extent[6] = {};
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != 1) throw ValidationError("unsupported prior file version");
  in.read(reinterpret_cast<char*>(&k), sizeof(k));
  in.read(reinterpret_cast<char*>(&res), sizeof(res));
  in.read(reinterpret_cast<char*>(extent), sizeof(extent));
  if (!in || res < 2 || k > 4096) throw ValidationError("corrupt prior header");
  if (extent[0] != extent[1] || extent[0] != extent[2] || extent[3] != extent[4] ||
      extent[3] != extent[5])
    throw ValidationError("prior extent must be cubic");

  LatentShapeModel model;
  model.mean_ = Grid3f(static_cast<int>(res), extent[0], extent[3]);
  in.read(reinterpret_cast<char*>(model.mean_.data().data()),
          static_cast<std::streamsize>(model.mean_.size() * sizeof(float)));
  model.basis_.resize(k);
  for (auto& b : model.basis_) {
    b = Grid3f(static_cast<int>(res), extent[0], extent[3]);
    in.read(reinterpret_cast<char*>(b.data().data()),
            static_cast<std::streamsize>(b.size() * sizeof(float)));
  }
  model.sigma_ = Eigen::VectorXd::Zero(k);
  model.padded_ = 0;
  for (std::uint32_t i = 0; i < k; ++i) {
    float s = 0.f;
    in.read(reinterpret_cast<char*>(&s), sizeof(s));
    model.sigma_(i) = s;
    if (s == 0.f) ++model.padded_;
  }
  if (!in) throw ValidationError("truncated prior file " + path.string());
  return model;
}

}  // namespace objmap
