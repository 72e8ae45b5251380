// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "objmap/core/errors.hpp"
#include "objmap/core/rng.hpp"
#include "objmap/shape/posterior.hpp"
#include "objmap/shape/prior.hpp"
#include "objmap/volume/tsdf.hpp"

using namespace objmap;

namespace {

double dot_grids(const Grid3f& a, const Grid3f& b) {
  double s = 0.0;
  for (std::size_t v = 0; v < a.size(); ++v) s += static_cast<double>(a[v]) * b[v];
  return s;
}

// True when p and small perturbations of it stay strictly inside one cell of
// the lattice, so interpolation is smooth across finite-difference probes.
bool away_from_cell_faces(const Grid3f& g, const Eigen::Vector3d& p, double frac_margin = 0.03) {
  const double h = g.spacing_d();
  for (int a = 0; a < 3; ++a) {
    const double u = (p(a) - static_cast<double>(g.lo())) / h;
    const double f = u - std::floor(u);
    if (f < frac_margin || f > 1.0 - frac_margin) return false;
  }
  return true;
}

LatentShapeModel two_sphere_model(int latent_dim = 1, int res = 48) {
  std::vector<ScalarField> shapes{testutil::sphere_sdf(0.4), testutil::sphere_sdf(0.6)};
  return LatentShapeModel::build(shapes, latent_dim, res);
}

}  // namespace

TEST_CASE("sample_field hits the analytic value at every node") {
  const Grid3f g = sample_field(testutil::sphere_sdf(0.5), 9, -1.f, 1.f);
  for (int k = 0; k < 9; ++k)
    for (int j = 0; j < 9; ++j)
      for (int i = 0; i < 9; ++i) {
        const Eigen::Vector3d p = g.node_position_d(i, j, k);
        CHECK(g.at(i, j, k) == doctest::Approx(p.norm() - 0.5).epsilon(1e-6));
      }
}

TEST_CASE("two-sphere training set: mean, basis, sigma, projection") {
  const LatentShapeModel model = two_sphere_model();
  const std::size_t voxels = model.mean().size();

  // Mean of radii 0.4 and 0.6 is the radius-0.5 sphere, exact at nodes.
  const Grid3f ref = sample_field(testutil::sphere_sdf(0.5), model.resolution(), -1.f, 1.f);
  double worst = 0.0;
  for (std::size_t v = 0; v < voxels; ++v)
    worst = std::max(worst, std::abs(static_cast<double>(model.mean()[v]) - ref[v]));
  CHECK(worst < 1e-6);

  // Centered data is a constant grid, so the single component is flat with
  // magnitude 1/sqrt(V) and score stddev sqrt(0.02 V / (N-1)).
  REQUIRE(model.latent_dim() == 1);
  CHECK(model.padded_components() == 0);
  const double flat = 1.0 / std::sqrt(static_cast<double>(voxels));
  for (std::size_t v = 0; v < voxels; ++v) {
    CHECK(std::abs(model.basis(0)[v]) == doctest::Approx(flat).epsilon(1e-5));
    CHECK(model.basis(0)[v] == doctest::Approx(model.basis(0)[0]).epsilon(1e-5));
  }
  CHECK(model.sigma()(0) ==
        doctest::Approx(std::sqrt(0.02 * static_cast<double>(voxels))).epsilon(1e-6));

  // A held-out sphere inside the span projects and decodes back exactly.
  const Eigen::VectorXd z = model.project(testutil::sphere_sdf(0.45));
  const Grid3f decoded = model.decode(z);
  const Grid3f target = sample_field(testutil::sphere_sdf(0.45), model.resolution(), -1.f, 1.f);
  worst = 0.0;
  for (std::size_t v = 0; v < voxels; ++v)
    worst = std::max(worst, std::abs(static_cast<double>(decoded[v]) - target[v]));
  CHECK(worst < 1e-6);
}

TEST_CASE("decode at zero code returns the mean bitwise") {
  const LatentShapeModel model = two_sphere_model(2);
  const Grid3f decoded = model.decode(Eigen::VectorXd::Zero(2));
  CHECK(decoded.data() == model.mean().data());
}

TEST_CASE("mean sdf of the two-sphere prior near (0.7,0,0) is about 0.2") {
  const LatentShapeModel model = two_sphere_model();
  const double v = model.sdf(Eigen::Vector3d(0.7, 0.0, 0.0), Eigen::VectorXd::Zero(1));
  CHECK(v == doctest::Approx(0.2).epsilon(0.025));
  CHECK(std::abs(v - 0.2) < 5e-3);
}

TEST_CASE("basis stays orthonormal, including padded components") {
  std::vector<ScalarField> shapes{testutil::sphere_sdf(0.4), testutil::sphere_sdf(0.6),
                                  testutil::box_sdf({0.3, 0.5, 0.4}),
                                  testutil::box_sdf({0.5, 0.3, 0.35}),
                                  testutil::box_sdf({0.45, 0.45, 0.2})};
  const LatentShapeModel model = LatentShapeModel::build(shapes, 6, 32);
  REQUIRE(model.latent_dim() == 6);
  CHECK(model.padded_components() == 2);  // five shapes span at most rank 4
  for (int a = 0; a < 6; ++a)
    for (int b = a; b < 6; ++b) {
      const double want = a == b ? 1.0 : 0.0;
      CHECK(std::abs(dot_grids(model.basis(a), model.basis(b)) - want) < 1e-6);
    }
  CHECK(model.sigma()(3) > 0.0);
  CHECK(model.sigma()(4) == 0.0);
  CHECK(model.sigma()(5) == 0.0);
  CHECK(model.sigma()(0) >= model.sigma()(1));
  CHECK(model.sigma()(1) >= model.sigma()(2));
}

TEST_CASE("identical training shapes leave zero variance everywhere") {
  std::vector<ScalarField> shapes(3, ScalarField(testutil::sphere_sdf(0.5)));
  const LatentShapeModel model = LatentShapeModel::build(shapes, 2, 24);
  CHECK(model.sigma().norm() == 0.0);
  CHECK(model.padded_components() == 2);
}

TEST_CASE("prior sdf is linear in the code") {
  const LatentShapeModel model = two_sphere_model(2, 32);
  auto rng = make_rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int it = 0; it < 20; ++it) {
    const Eigen::Vector3d p(gauss(rng) * 0.4, gauss(rng) * 0.4, gauss(rng) * 0.4);
    Eigen::VectorXd a(2), b(2);
    a << gauss(rng), gauss(rng);
    b << gauss(rng), gauss(rng);
    const double lhs = model.sdf(p, a + b);
    const double rhs = model.sdf(p, a) + model.sdf(p, b) - model.sdf(p, Eigen::VectorXd::Zero(2));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("outside the lattice the sdf continues by distance to the box") {
  const LatentShapeModel model = two_sphere_model();
  Eigen::VectorXd z(1);
  z << 3.7;
  const double at_face = model.sdf(Eigen::Vector3d(1.0, 0.2, -0.4), z);
  const double outside = model.sdf(Eigen::Vector3d(1.3, 0.2, -0.4), z);
  CHECK(outside == doctest::Approx(at_face + 0.3).epsilon(1e-12));

  const double just_in = model.sdf(Eigen::Vector3d(1.0 - 1e-7, 0.2, -0.4), z);
  CHECK(std::abs(just_in - at_face) < 1e-5);

  Eigen::Vector3d g;
  model.sdf(Eigen::Vector3d(1.4, 1.1, 0.0), z, &g, nullptr);
  CHECK(g.norm() > 0.0);
}

TEST_CASE("prior sdf derivatives match finite differences") {
  const LatentShapeModel model = two_sphere_model(2, 32);
  auto rng = make_rng(11);
  std::uniform_real_distribution<double> uni(-1.2, 1.2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double h = 1e-4;
  int accepted = 0;
  for (int it = 0; it < 4000 && accepted < 100; ++it) {
    const Eigen::Vector3d p(uni(rng), uni(rng), uni(rng));
    // Keep probes away from the extent boundary and, along every unclamped
    // axis, away from lattice cell faces; both are interpolation kinks.
    bool near_kink = false;
    const double h_cell = model.mean().spacing_d();
    for (int a = 0; a < 3; ++a) {
      if (std::abs(std::abs(p(a)) - 1.0) < 0.01) near_kink = true;
      if (std::abs(p(a)) < 1.0) {
        const double u = (p(a) + 1.0) / h_cell;
        const double f = u - std::floor(u);
        if (f < 0.03 || f > 0.97) near_kink = true;
      }
    }
    if (near_kink) continue;
    Eigen::VectorXd z(2);
    z << gauss(rng), gauss(rng);

    Eigen::Vector3d d_point;
    Eigen::VectorXd d_z;
    const double val = model.sdf(p, z, &d_point, &d_z);
    (void)val;

    Eigen::Vector3d fd_point;
    for (int a = 0; a < 3; ++a) {
      Eigen::Vector3d pp = p, pm = p;
      pp(a) += h;
      pm(a) -= h;
      fd_point(a) = (model.sdf(pp, z) - model.sdf(pm, z)) / (2 * h);
    }
    CHECK((fd_point - d_point).norm() <= 1e-3 * std::max(1.0, d_point.norm()));

    Eigen::VectorXd fd_z(2);
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd zp = z, zm = z;
      zp(k) += h;
      zm(k) -= h;
      fd_z(k) = (model.sdf(p, zp) - model.sdf(p, zm)) / (2 * h);
    }
    CHECK((fd_z - d_z).norm() <= 1e-6 * std::max(1.0, d_z.norm()));
    ++accepted;
  }
  CHECK(accepted == 100);
}

TEST_CASE("prior file round trip is bitwise faithful") {
  const LatentShapeModel model = two_sphere_model(3, 24);
  const auto path = std::filesystem::temp_directory_path() / "objmap_prior_test.bin";
  model.save(path);

  std::ifstream raw(path, std::ios::binary);
  char version = 0;
  raw.read(&version, 1);
  CHECK(version == 1);
  raw.close();

  const std::uintmax_t voxels = 24ull * 24 * 24;
  CHECK(std::filesystem::file_size(path) == 1 + 4 + 4 + 24 + 4 * voxels * (1 + 3) + 4 * 3);

  const LatentShapeModel back = LatentShapeModel::load(path);
  CHECK(back.latent_dim() == 3);
  CHECK(back.resolution() == 24);
  CHECK(back.lo() == model.lo());
  CHECK(back.hi() == model.hi());
  CHECK(back.mean().data() == model.mean().data());
  for (int k = 0; k < 3; ++k) CHECK(back.basis(k).data() == model.basis(k).data());
  for (int k = 0; k < 3; ++k)
    CHECK(back.sigma()(k) == doctest::Approx(model.sigma()(k)).epsilon(1e-6));
  CHECK(back.padded_components() == model.padded_components());
  std::filesystem::remove(path);
}

TEST_CASE("sdf_to_occupancy ramp") {
  CHECK(sdf_to_occupancy(0.0, 0.05) == 0.0);
  CHECK(sdf_to_occupancy(-0.05, 0.05) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sdf_to_occupancy(-0.2, 0.05) == 1.0);
  CHECK(sdf_to_occupancy(0.02, 0.05) == 0.0);

  double d = 0.0;
  CHECK(sdf_to_occupancy(-0.05, 0.05, 0.0, d) == doctest::Approx(0.5));
  CHECK(d == doctest::Approx(-10.0));
  sdf_to_occupancy(0.3, 0.05, 0.0, d);
  CHECK(d == 0.0);

  CHECK(sdf_to_occupancy(0.0, 0.05, 0.5) == doctest::Approx(0.5));
  CHECK(sdf_to_occupancy(0.05, 0.05, 0.5) == 0.0);
  CHECK(sdf_to_occupancy(-0.05, 0.05, 0.5) == 1.0);

  CHECK_THROWS_AS(sdf_to_occupancy(0.0, 0.0), ValidationError);
}

TEST_CASE("correction basis is an orthonormal DCT dictionary") {
  const PosteriorShapeModel post(32, 16);
  REQUIRE(post.correction_dim() == 32);
  for (int a = 0; a < 32; ++a)
    for (int b = a; b < 32; ++b) {
      const double want = a == b ? 1.0 : 0.0;
      CHECK(std::abs(dot_grids(post.correction_basis(a), post.correction_basis(b)) - want) <
            1e-6);
    }
  // First mode is the constant 1/sqrt(V).
  const float dc = post.correction_basis(0)[0];
  CHECK(dc == doctest::Approx(1.0 / 64.0).epsilon(1e-6));
  for (std::size_t v = 0; v < post.correction_basis(0).size(); ++v)
    CHECK(post.correction_basis(0)[v] == dc);

  // Construction is deterministic.
  const PosteriorShapeModel again(32, 16);
  for (int m = 0; m < 32; ++m)
    CHECK(post.correction_basis(m).data() == again.correction_basis(m).data());
}

TEST_CASE("posterior equals prior when nothing was fused") {
  const TsdfVolume vol;
  const LatentShapeModel prior = two_sphere_model(2, 32);
  const PosteriorShapeModel post;
  auto rng = make_rng(3);
  std::uniform_real_distribution<double> uni(-1.1, 1.1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int it = 0; it < 200; ++it) {
    const Eigen::Vector3d p(uni(rng), uni(rng), uni(rng));
    Eigen::VectorXd z0(2);
    z0 << gauss(rng), gauss(rng);
    const auto ev = post.occupancy(vol, prior, p, z0, Eigen::VectorXd::Zero(32));
    const double want = sdf_to_occupancy(prior.sdf(p, z0), post.sigma);
    CHECK(ev.o == doctest::Approx(want).epsilon(1e-9));
    CHECK(ev.gamma == 0.0);
  }
}

TEST_CASE("unit correction code shifts occupancy by the sampled mode") {
  const TsdfVolume vol;
  const LatentShapeModel prior = two_sphere_model(1, 32);
  const PosteriorShapeModel post;
  const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(1);
  for (int m : {0, 3, 17, 31}) {
    const Eigen::Vector3d p(0.41, 0.13, -0.22);  // prior occupancy mid-ramp
    Eigen::VectorXd z1 = Eigen::VectorXd::Zero(32);
    const double base = post.occupancy(vol, prior, p, z0, z1).o;
    z1(m) = 1.0;
    const auto shifted = post.occupancy(vol, prior, p, z0, z1);
    const double mode = post.correction_basis(m).sample(p);
    REQUIRE(shifted.raw > 0.0);
    REQUIRE(shifted.raw < 1.0);
    CHECK(shifted.o - base == doctest::Approx(mode).epsilon(1e-9));
  }
}

TEST_CASE("posterior occupancy stays in [0,1] under wild codes") {
  const TsdfVolume vol;
  const LatentShapeModel prior = two_sphere_model(2, 32);
  const PosteriorShapeModel post;
  auto rng = make_rng(5);
  std::uniform_real_distribution<double> uni(-1.3, 1.3);
  std::normal_distribution<double> gauss(0.0, 8.0);
  for (int it = 0; it < 300; ++it) {
    const Eigen::Vector3d p(uni(rng), uni(rng), uni(rng));
    Eigen::VectorXd z0(2), z1(32);
    for (int k = 0; k < 2; ++k) z0(k) = gauss(rng);
    for (int m = 0; m < 32; ++m) z1(m) = gauss(rng);
    const auto ev = post.occupancy(vol, prior, p, z0, z1);
    CHECK(ev.o >= 0.0);
    CHECK(ev.o <= 1.0);
  }
}

TEST_CASE("full confidence gates the prior out entirely") {
  TsdfVolume vol;
  const CameraIntrinsics cam;
  const DepthImage depth(cam.width, cam.height, 1.f);  // frontal plane at z = 1
  for (int i = 0; i < 20; ++i)
    vol.integrate_depth(depth, nullptr, 0, ObjectPose{}, RigidTransform{}, cam);

  const LatentShapeModel prior = two_sphere_model(1, 32);
  const PosteriorShapeModel post;
  const Eigen::Vector3d p(0.11, 0.07, 0.93);  // near the plane, mid occupancy ramp
  const auto [t, w] = vol.sample_trilinear(p);
  REQUIRE(w == doctest::Approx(20.0));
  REQUIRE(w / vol.weight_cap() >= post.tau);

  Eigen::VectorXd z0(1);
  z0 << 2.5;
  const auto ev = post.occupancy(vol, prior, p, z0, Eigen::VectorXd::Zero(32), true);
  CHECK(ev.gamma == 1.0);
  CHECK(ev.d_z0.norm() == 0.0);
  CHECK(ev.o == doctest::Approx(sdf_to_occupancy(t, post.sigma)).epsilon(1e-9));

  // Same point, different codes: the measured side wins.
  Eigen::VectorXd other(1);
  other << -2.5;
  CHECK(post.occupancy(vol, prior, p, other, Eigen::VectorXd::Zero(32)).o ==
        doctest::Approx(ev.o).epsilon(1e-12));
}

TEST_CASE("posterior derivatives match finite differences") {
  TsdfVolume vol;
  const CameraIntrinsics cam;
  for (const Eigen::Vector3d& dir : testutil::fibonacci_directions(6)) {
    const RigidTransform cam_pose = testutil::look_at(dir * 2.0, {0, 0, 0});
    const DepthImage depth = testutil::render_sphere_depth(cam, cam_pose, 0.5);
    vol.integrate_depth(depth, nullptr, 0, ObjectPose{}, cam_pose, cam);
  }
  const LatentShapeModel prior = two_sphere_model(2, 32);
  PosteriorShapeModel post;

  auto rng = make_rng(17);
  std::uniform_real_distribution<double> uni(-0.9, 0.9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double h = 1e-4;
  int accepted = 0;
  for (int it = 0; it < 20000 && accepted < 100; ++it) {
    const Eigen::Vector3d p(uni(rng), uni(rng), uni(rng));
    if (!away_from_cell_faces(vol.tsdf(), p)) continue;
    if (!away_from_cell_faces(prior.mean(), p)) continue;
    if (!away_from_cell_faces(post.correction_basis(0), p)) continue;
    Eigen::VectorXd z0(2), z1(32);
    for (int k = 0; k < 2; ++k) z0(k) = 0.5 * gauss(rng);
    for (int m = 0; m < 32; ++m) z1(m) = 0.02 * gauss(rng);

    const auto ev = post.occupancy(vol, prior, p, z0, z1, true);
    // Keep clear of every clamp so the finite difference sees one smooth branch.
    if (ev.raw < 0.05 || ev.raw > 0.95) continue;
    const auto [t, w] = vol.sample_trilinear(p);
    const double meas_raw = post.surface_offset - t / (2 * post.sigma);
    if (std::abs(meas_raw) < 0.05 || std::abs(meas_raw - 1.0) < 0.05) continue;
    const double pri_raw = post.surface_offset - prior.sdf(p, z0) / (2 * post.sigma);
    if (std::abs(pri_raw) < 0.05 || std::abs(pri_raw - 1.0) < 0.05) continue;
    (void)w;

    auto value = [&](const Eigen::Vector3d& q, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b) { return post.occupancy(vol, prior, q, a, b).o; };

    Eigen::Vector3d fd_p;
    for (int a = 0; a < 3; ++a) {
      Eigen::Vector3d pp = p, pm = p;
      pp(a) += h;
      pm(a) -= h;
      fd_p(a) = (value(pp, z0, z1) - value(pm, z0, z1)) / (2 * h);
    }
    CHECK((fd_p - ev.d_point).norm() <= 1e-3 * std::max(1.0, ev.d_point.norm()));

    Eigen::VectorXd fd_z0(2);
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd zp = z0, zm = z0;
      zp(k) += h;
      zm(k) -= h;
      fd_z0(k) = (value(p, zp, z1) - value(p, zm, z1)) / (2 * h);
    }
    CHECK((fd_z0 - ev.d_z0).norm() <= 1e-3 * std::max(0.01, ev.d_z0.norm()));

    Eigen::VectorXd fd_z1(32);
    for (int m = 0; m < 32; ++m) {
      Eigen::VectorXd zp = z1, zm = z1;
      zp(m) += h;
      zm(m) -= h;
      fd_z1(m) = (value(p, z0, zp) - value(p, z0, zm)) / (2 * h);
    }
    CHECK((fd_z1 - ev.d_z1).norm() <= 1e-3 * std::max(0.01, ev.d_z1.norm()));
    ++accepted;
  }
  CHECK(accepted == 100);
}

TEST_CASE("completed sdf crosses zero where blended occupancy crosses the offset") {
  TsdfVolume vol;
  const LatentShapeModel prior = two_sphere_model(1, 32);
  const PosteriorShapeModel post;
  const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(1);
  auto rng = make_rng(23);
  std::normal_distribution<double> gauss(0.0, 0.05);
  Eigen::VectorXd z1(32);
  for (int m = 0; m < 32; ++m) z1(m) = gauss(rng);

  // With an empty volume the completed surface is the corrected prior; find a
  // zero crossing along a ray and check occupancy sits at the surface level.
  const Eigen::Vector3d dir = Eigen::Vector3d(0.3, 0.5, 0.8).normalized();
  double t_lo = 0.0, t_hi = 0.9;
  REQUIRE(post.completed_sdf(vol, prior, dir * t_lo, z0, z1) < 0.0);
  REQUIRE(post.completed_sdf(vol, prior, dir * t_hi, z0, z1) > 0.0);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    (post.completed_sdf(vol, prior, dir * mid, z0, z1) < 0 ? t_lo : t_hi) = mid;
  }
  const auto ev = post.occupancy(vol, prior, dir * t_lo, z0, z1);
  CHECK(ev.raw == doctest::Approx(post.surface_offset).epsilon(1e-6));
}

