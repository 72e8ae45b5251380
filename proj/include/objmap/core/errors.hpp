// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace objmap {

// Base class for all recoverable engine errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite / non-positive depth, empty detection support, etc.
class InvalidMeasurementError : public Error {
 public:
  using Error::Error;
};

/// Rank-deficient alignment or registration geometry. Carries the number of
/// unobservable degrees of freedom when known (-1 otherwise).
class DegenerateGeometryError : public Error {
 public:
  explicit DegenerateGeometryError(const std::string& msg, int unobservable_dof = -1)
      : Error(msg), unobservable_dof(unobservable_dof) {}
  int unobservable_dof;
};

/// Too few valid measurements to run an estimation stage.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Optimizer could not make progress (damping overflow, non-finite residuals).
class NoProgressError : public Error {
 public:
  using Error::Error;
};

/// Scene spec / run config failed validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Mesh inside/outside classification disagreed between probe rays.
class ParityInconsistencyError : public Error {
 public:
  explicit ParityInconsistencyError(const std::string& msg, long offending_rays)
      : Error(msg), offending_rays(offending_rays) {}
  long offending_rays;
};

}  // namespace objmap
