// SPDX-License-Identifier: Apache-2.0

#include "objmap/render/raycast.hpp"

#include <algorithm>
#include <cmath>

namespace objmap {

std::optional<double> raycast_sdf(const ScalarField& field, const Eigen::Vector3d& origin,
                                  const Eigen::Vector3d& direction, double t_min, double t_max,
                                  double tol) {
  if (t_max <= t_min) return std::nullopt;
  double t = t_min;
  double f = field(origin + t * direction);
  if (f <= 0.0) return t_min;

  // Conservative sphere tracing; the slack absorbs fields that are only
  // approximately unit-Lipschitz (interpolated or blended SDFs).
  const int max_steps = 512;
  for (int step = 0; step < max_steps; ++step) {
    const double advance = std::max(0.8 * f, tol);
    const double t_next = std::min(t + advance, t_max);
    const double f_next = field(origin + t_next * direction);
    if (f_next <= 0.0) {
      // Bracketed: bisect to the crossing.
      double lo = t, hi = t_next;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (field(origin + mid * direction) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    if (f_next < tol) return t_next;
    if (t_next >= t_max) return std::nullopt;
    t = t_next;
    f = f_next;
  }
  return std::nullopt;
}

}  // namespace objmap
