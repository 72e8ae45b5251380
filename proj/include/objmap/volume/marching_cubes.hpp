// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "objmap/core/grid3.hpp"
#include "objmap/volume/mesh.hpp"

namespace objmap {

using ScalarField = std::function<double(const Eigen::Vector3d&)>;

// Marching cubes over the node lattice, iso-surface at `level`. Crossing
// vertices are shared between adjacent cells (edge-keyed welding), so the
// result is watertight whenever the level set stays inside the grid. When a
// continuous `refine` field is supplied, each vertex is moved to the field's
// zero of (refine - level) along its edge by bisection.
TriMesh extract_mesh(const Grid3f& grid, float level, const ScalarField* refine = nullptr);

}  // namespace objmap
