// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "objmap/core/rng.hpp"
#include "objmap/geometry/camera.hpp"
#include "objmap/volume/marching_cubes.hpp"
#include "objmap/volume/tsdf.hpp"
#include "helpers.hpp"

using namespace objmap;



TEST_CASE("integrate with empty mask leaves volume bitwise unchanged") {
  TsdfVolume vol;
  const auto tsdf_before = vol.tsdf().data();
  const auto weight_before = vol.weight().data();
  const CameraIntrinsics cam;
  DepthImage depth(cam.width, cam.height, 1.f);
  MaskImage mask(cam.width, cam.height, 0);  // object id 1 nowhere present
  vol.integrate_depth(depth, &mask, 1, ObjectPose{}, RigidTransform{}, cam);
  CHECK(vol.tsdf().data() == tsdf_before);
  CHECK(vol.weight().data() == weight_before);
}

TEST_CASE("frontal plane gives near-zero tsdf at the surface voxel") {
  TsdfVolume vol;
  const CameraIntrinsics cam;
  DepthImage depth(cam.width, cam.height, 1.f);  // plane z = 1 m
  vol.integrate_depth(depth, nullptr, 0, ObjectPose{}, RigidTransform{}, cam);

  // node nearest canonical (0,0,1): x,y ≈ ±1/63, z = 1 exactly
  const int res = vol.resolution();
  const float voxel = vol.tsdf().spacing();
  const std::size_t idx = vol.tsdf().index(res / 2 - 1, res / 2 - 1, res - 1);
  CHECK(std::abs(vol.tsdf()[idx]) < voxel);
  CHECK(vol.weight()[idx] == 1.f);
  // plane depth equals voxel camera depth up to node-coordinate roundoff
  CHECK(std::abs(vol.tsdf()[idx]) < 1e-9f);
}

TEST_CASE("voxel two truncations behind the surface stays untouched") {
  TsdfVolume vol;
  const CameraIntrinsics cam;
  DepthImage depth(cam.width, cam.height, 0.8f);  // plane z = 0.8 m
  vol.integrate_depth(depth, nullptr, 0, ObjectPose{}, RigidTransform{}, cam);
  // node at canonical z = 1.0 sits 0.2 = 2 mu behind the observed plane
  const int res = vol.resolution();
  const std::size_t idx = vol.tsdf().index(res / 2 - 1, res / 2 - 1, res - 1);
  CHECK(vol.tsdf()[idx] == vol.truncation());
  CHECK(vol.weight()[idx] == 0.f);
}

TEST_CASE("fusing identical frames equals fusing one") {
  const CameraIntrinsics cam;
  const RigidTransform cam_pose = testutil::look_at({0, -1.8, 0.4}, {0, 0, 0});
  const DepthImage depth = testutil::render_sphere_depth(cam, cam_pose, 0.5);

  TsdfVolume one;
  one.integrate_depth(depth, nullptr, 0, ObjectPose{}, cam_pose, cam);
  TsdfVolume many;
  for (int i = 0; i < 5; ++i) many.integrate_depth(depth, nullptr, 0, ObjectPose{}, cam_pose, cam);

  for (std::size_t i = 0; i < one.tsdf().size(); ++i) {
    CHECK(std::abs(one.tsdf()[i] - many.tsdf()[i]) < 1e-12);
    if (one.weight()[i] > 0) {
      CHECK(many.weight()[i] == 5.f);
    } else {
      CHECK(many.weight()[i] == 0.f);
    }
  }
}

TEST_CASE("two-view fusion is order-insensitive") {
  const CameraIntrinsics cam;
  const RigidTransform pa = testutil::look_at({0, -1.8, 0.3}, {0, 0, 0});
  const RigidTransform pb = testutil::look_at({1.5, 0.9, -0.4}, {0, 0, 0});
  const DepthImage da = testutil::render_sphere_depth(cam, pa, 0.5);
  const DepthImage db = testutil::render_sphere_depth(cam, pb, 0.5);

  TsdfVolume ab, ba;
  ab.integrate_depth(da, nullptr, 0, ObjectPose{}, pa, cam);
  ab.integrate_depth(db, nullptr, 0, ObjectPose{}, pb, cam);
  ba.integrate_depth(db, nullptr, 0, ObjectPose{}, pb, cam);
  ba.integrate_depth(da, nullptr, 0, ObjectPose{}, pa, cam);
  for (std::size_t i = 0; i < ab.tsdf().size(); ++i) {
    CHECK(std::abs(ab.tsdf()[i] - ba.tsdf()[i]) <= 1e-9);
    CHECK(ab.weight()[i] == ba.weight()[i]);
  }
}

TEST_CASE("20-view fusion of an exact sphere recovers the signed distance") {
  const CameraIntrinsics cam;
  const double radius = 0.5;
  TsdfVolume vol;
  for (const Eigen::Vector3d& dir : testutil::fibonacci_directions(20)) {
    const RigidTransform cam_pose = testutil::look_at(dir * 2.0, {0, 0, 0});
    const DepthImage depth = testutil::render_sphere_depth(cam, cam_pose, radius);
    vol.integrate_depth(depth, nullptr, 0, ObjectPose{}, cam_pose, cam);
  }

  const int res = vol.resolution();
  const float voxel = vol.tsdf().spacing();
  const float mu = vol.truncation();
  int checked = 0;
  float worst = 0.f;
  for (int k = 0; k < res; ++k)
    for (int j = 0; j < res; ++j)
      for (int i = 0; i < res; ++i) {
        const std::size_t idx = vol.tsdf().index(i, j, k);
        if (vol.weight()[idx] <= 0) continue;
        const float true_sdf = vol.tsdf().node_position(i, j, k).norm() - static_cast<float>(radius);
        if (std::abs(true_sdf) >= mu / 2) continue;
        ++checked;
        worst = std::max(worst, std::abs(vol.tsdf()[idx] - true_sdf));
      }
  CHECK(checked > 1000);
  CHECK(worst < voxel);

  // fused surface: mesh chamfer to the analytic sphere under 2 voxels
  const TriMesh mesh = vol.extract_surface();
  REQUIRE(!mesh.empty());
  double worst_r = 0;
  for (const Eigen::Vector3f& v : mesh.vertices) {
    // ignore the inner crust boundary around the unobserved core (near r - mu)
    if (v.norm() < radius - mu / 2) continue;
    worst_r = std::max(worst_r, std::abs(static_cast<double>(v.norm()) - radius));
  }
  CHECK(worst_r < 2.0 * voxel);
}

TEST_CASE("sample_trilinear contract") {
  TsdfVolume vol;
  auto& g = vol.tsdf();
  g.at(10, 20, 30) = 0.05f;
  vol.weight().at(10, 20, 30) = 3.f;
  const Eigen::Vector3d at_node = g.node_position_d(10, 20, 30);
  auto [v, w] = vol.sample_trilinear(at_node);
  CHECK(v == doctest::Approx(static_cast<double>(0.05f)).epsilon(1e-12));
  CHECK(w == doctest::Approx(3.0).epsilon(1e-12));

  // midpoint of two nodes: values mu and 0.02 -> mean
  g.at(11, 20, 30) = 0.02f;
  const Eigen::Vector3d mid = 0.5 * (at_node + g.node_position_d(11, 20, 30));
  CHECK(vol.sample_trilinear(mid).first == doctest::Approx(0.5 * (0.05 + 0.02)).epsilon(1e-6));

  // outside the extent: unknown space
  auto [vo, wo] = vol.sample_trilinear({1.5, 0, 0});
  CHECK(vo == doctest::Approx(vol.truncation()));
  CHECK(wo == 0.0);
}

TEST_CASE("extract_mesh on analytic sphere sdf") {
  const double radius = 0.5;
  Grid3f grid(64, -1.f, 1.f, 0.f);
  for (int k = 0; k < 64; ++k)
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i)
        grid.at(i, j, k) = grid.node_position(i, j, k).norm() - static_cast<float>(radius);

  const TriMesh mesh = extract_mesh(grid, 0.f);
  REQUIRE(!mesh.empty());
  const float voxel = grid.spacing();
  float worst = 0.f;
  for (const Eigen::Vector3f& v : mesh.vertices)
    worst = std::max(worst, std::abs(v.norm() - static_cast<float>(radius)));
  CHECK(worst < 2 * voxel);
  CHECK(mesh.is_closed());
  CHECK(mesh.euler_characteristic() == 2);

  // with exact-field refinement the vertices land on the sphere
  ScalarField field = [&](const Eigen::Vector3d& p) { return p.norm() - radius; };
  const TriMesh refined = extract_mesh(grid, 0.f, &field);
  float worst_refined = 0.f;
  for (const Eigen::Vector3f& v : refined.vertices)
    worst_refined = std::max(worst_refined, std::abs(v.norm() - static_cast<float>(radius)));
  CHECK(worst_refined < 1e-5f);
  CHECK(refined.is_closed());
}

TEST_CASE("extract_mesh of all-positive field is empty") {
  Grid3f grid(16, -1.f, 1.f, 1.f);
  CHECK(extract_mesh(grid, 0.f).empty());
}

TEST_CASE("extract_mesh stays closed on lumpy level sets") {
  // sum of gaussian bumps exercises many marching-cubes cases
  Rng rng = make_rng(99);
  std::uniform_real_distribution<float> pos(-0.6f, 0.6f);
  std::vector<Eigen::Vector3f> centers;
  for (int c = 0; c < 6; ++c) centers.emplace_back(pos(rng), pos(rng), pos(rng));
  Grid3f grid(48, -1.f, 1.f, 0.f);
  for (int k = 0; k < 48; ++k)
    for (int j = 0; j < 48; ++j)
      for (int i = 0; i < 48; ++i) {
        const Eigen::Vector3f p = grid.node_position(i, j, k);
        float v = -0.4f;
        for (const auto& c : centers) v += std::exp(-(p - c).squaredNorm() * 8.f);
        grid.at(i, j, k) = v;
      }
  const TriMesh mesh = extract_mesh(grid, 0.f);
  REQUIRE(!mesh.empty());
  CHECK(mesh.is_closed());
}

TEST_CASE("volume binary dump roundtrip and header layout") {
  TsdfVolume vol(32, 0.08f, 64.f);
  Rng rng = make_rng(5);
  std::uniform_real_distribution<float> d(-0.08f, 0.08f);
  for (auto& v : vol.tsdf().data()) v = d(rng);
  for (auto& w : vol.weight().data()) w = std::abs(d(rng)) * 100.f;

  const auto path = std::filesystem::temp_directory_path() / "objmap_vol.bin";
  vol.save(path);

  // header: u32 resolution, 6 x f32 extent, f32 truncation
  std::ifstream in(path, std::ios::binary);
  std::uint32_t res;
  float extent[6], trunc;
  in.read(reinterpret_cast<char*>(&res), 4);
  in.read(reinterpret_cast<char*>(extent), 24);
  in.read(reinterpret_cast<char*>(&trunc), 4);
  CHECK(res == 32);
  CHECK(extent[0] == -1.f);
  CHECK(extent[3] == 1.f);
  CHECK(trunc == 0.08f);
  const auto file_size = std::filesystem::file_size(path);
  CHECK(file_size == 4 + 24 + 4 + 2 * 32 * 32 * 32 * 4);

  const TsdfVolume back = TsdfVolume::load(path);
  CHECK(back.resolution() == 32);
  CHECK(back.truncation() == 0.08f);
  CHECK(back.tsdf().data() == vol.tsdf().data());
  CHECK(back.weight().data() == vol.weight().data());
}

TEST_CASE("tsdf volume starts unknown everywhere") {
  TsdfVolume vol;
  for (std::size_t i = 0; i < vol.tsdf().size(); ++i) {
    CHECK(vol.tsdf()[i] == vol.truncation());
    CHECK(vol.weight()[i] == 0.f);
  }
}
