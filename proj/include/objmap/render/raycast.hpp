// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <optional>

#include "objmap/shape/prior.hpp"

namespace objmap {

// Sphere tracing against a metric SDF. Returns the ray parameter of the first
// surface crossing in [t_min, t_max], refined by bisection once bracketed;
// an origin already inside the shape reports t_min. Direction must be unit
// length for the step sizes to be valid.
std::optional<double> raycast_sdf(const ScalarField& field, const Eigen::Vector3d& origin,
                                  const Eigen::Vector3d& direction, double t_min, double t_max,
                                  double tol = 1e-4);

}  // namespace objmap
