// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <string>

#include "objmap/core/rng.hpp"
#include "objmap/shape/prior.hpp"
#include "objmap/volume/mesh.hpp"

namespace objmap {

// A procedurally generated canonical shape: an analytic signed distance field
// normalized to fit inside the 0.95 ball, plus a matching triangle mesh whose
// vertices sit on the field's zero set.
struct SynthShape {
  std::string category;
  ScalarField sdf;
  TriMesh mesh;
};

// Parameter sets with documented ranges; out-of-range values throw
// ValidationError.
struct SphereParams {
  double radius = 0.5;  // (0, 0.95]
};

struct BoxParams {
  Eigen::Vector3d half{0.4, 0.4, 0.4};  // each in (0, 0.5]
};

struct SuperellipsoidParams {
  Eigen::Vector3d half{0.45, 0.4, 0.35};  // each in (0, 0.5]
  double exponent = 4.0;                  // [2, 8]; 2 = ellipsoid, 8 = box-like
};

// Chair dimensions in generator units (normalized afterwards). Seat top sits
// at height seat_h over the ground plane; the backrest rises back_h above it.
struct ChairParams {
  double seat_w = 0.7;   // [0.5, 0.9]
  double seat_d = 0.62;  // [0.45, 0.8]
  double seat_t = 0.09;  // [0.06, 0.12]
  double seat_h = 0.45;  // [0.35, 0.55]
  double back_h = 0.6;   // [0.45, 0.8]
  double back_t = 0.07;  // [0.05, 0.10]
  double leg_r = 0.045;  // [0.03, 0.06]
};

ScalarField sphere_field(const SphereParams& p);
ScalarField box_field(const BoxParams& p);
ScalarField superellipsoid_field(const SuperellipsoidParams& p);
ScalarField chair_field(const ChairParams& p);

// Uniform parameter draws over the documented ranges.
SphereParams random_sphere(Rng& rng);
BoxParams random_box(Rng& rng);
SuperellipsoidParams random_superellipsoid(Rng& rng);
ChairParams random_chair(Rng& rng);

// Field plus extracted mesh for a random family member. Categories: "sphere",
// "box", "superellipsoid", "chair". Unknown category throws ValidationError.
SynthShape generate_shape(const std::string& category, Rng& rng, int mesh_resolution = 96);
SynthShape make_shape(const std::string& category, const ScalarField& sdf,
                      int mesh_resolution = 96);

// Training fields for the category's shape prior, drawn from substreams of
// `seed`. Evaluation shapes should come from disjoint seeds.
std::vector<ScalarField> prior_training_fields(const std::string& category, int count,
                                               std::uint64_t seed);

}  // namespace objmap
