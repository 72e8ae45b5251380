// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <functional>
#include <vector>

#include "objmap/core/grid3.hpp"

namespace objmap {

// Continuous scalar field, usually a signed distance function in the
// canonical frame.
using ScalarField = std::function<double(const Eigen::Vector3d&)>;

// Linear latent shape prior over SDF grids: decode(z) = mean + sum_k z[k] * B[k].
// Built by PCA over a training set of shapes sampled onto the lattice. The
// basis grids are orthonormal under the plain voxel dot product, so encoding
// is a projection.
class LatentShapeModel {
 public:
  LatentShapeModel() = default;

  // PCA via the Gram matrix of the centered training grids (cheap for the
  // usual few-dozen training shapes). If latent_dim exceeds the data rank the
  // basis is padded with deterministic orthonormal filler components whose
  // sigma is zero; padded_components() reports how many.
  static LatentShapeModel build(const std::vector<ScalarField>& shapes, int latent_dim,
                                int resolution = 64, float lo = -1.f, float hi = 1.f);

  int latent_dim() const { return static_cast<int>(basis_.size()); }
  int resolution() const { return mean_.resolution(); }
  float lo() const { return mean_.lo(); }
  float hi() const { return mean_.hi(); }
  int padded_components() const { return padded_; }

  const Grid3f& mean() const { return mean_; }
  const Grid3f& basis(int k) const { return basis_[static_cast<std::size_t>(k)]; }
  // Per-component standard deviation of the training codes; zero for padded
  // components. Used to whiten the latent regularizer.
  const Eigen::VectorXd& sigma() const { return sigma_; }

  // mean + sum_k z0[k] * basis[k] as a grid. decode(0) returns the mean bitwise.
  Grid3f decode(const Eigen::VectorXd& z0) const;

  // Least-squares code for a shape sampled onto the lattice.
  Eigen::VectorXd project(const ScalarField& shape) const;
  Eigen::VectorXd project_grid(const Grid3f& grid) const;

  // SDF of the decoded shape at a canonical point. Outside the lattice extent
  // the field continues as boundary value plus distance to the box, which
  // keeps it continuous and growing away from the shape. Optional analytic
  // derivatives with respect to the point and the code.
  double sdf(const Eigen::Vector3d& p, const Eigen::VectorXd& z0,
             Eigen::Vector3d* d_point = nullptr, Eigen::VectorXd* d_z0 = nullptr) const;

  void save(const std::filesystem::path& path) const;
  static LatentShapeModel load(const std::filesystem::path& path);

 private:
  Grid3f mean_;
  std::vector<Grid3f> basis_;
  Eigen::VectorXd sigma_;
  int padded_ = 0;
};

// Samples a continuous field onto a node lattice.
Grid3f sample_field(const ScalarField& field, int resolution, float lo, float hi);

}  // namespace objmap
