// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <random>

#include "objmap/core/config.hpp"
#include "objmap/core/errors.hpp"
#include "objmap/core/grid3.hpp"
#include "objmap/core/image.hpp"
#include "objmap/core/parallel.hpp"
#include "objmap/core/rng.hpp"

using namespace objmap;

namespace {
std::filesystem::path tmp_dir() {
  auto p = std::filesystem::temp_directory_path() / "objmap_test_core";
  std::filesystem::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("rng substreams are deterministic and distinct") {
  Rng a = make_rng(substream(42, 1, 0, 7));
  Rng b = make_rng(substream(42, 1, 0, 7));
  CHECK(a() == b());

  Rng c = make_rng(substream(42, 1, 0, 8));
  Rng d = make_rng(substream(42, 1, 1, 7));
  Rng e = make_rng(substream(43, 1, 0, 7));
  const auto ref = make_rng(substream(42, 1, 0, 7))();
  CHECK(c() != ref);
  CHECK(d() != ref);
  CHECK(e() != ref);
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t n = 1000;
  std::vector<std::atomic<int>> hits(n);
  for (auto& h : hits) h = 0;
  parallel_for(n, 4, [&](std::size_t i) { hits[i]++; });
  for (std::size_t i = 0; i < n; ++i) CHECK(hits[i] == 1);

  std::vector<std::atomic<int>> hits1(n);
  for (auto& h : hits1) h = 0;
  parallel_for(n, 1, [&](std::size_t i) { hits1[i]++; });
  for (std::size_t i = 0; i < n; ++i) CHECK(hits1[i] == 1);
}

TEST_CASE("image bilinear sampling uses integer pixel centers") {
  GrayImage img(4, 4, 0.f);
  img.at(1, 1) = 1.f;
  CHECK(img.bilinear(1.f, 1.f) == doctest::Approx(1.f));
  CHECK(img.bilinear(1.5f, 1.f) == doctest::Approx(0.5f));
  CHECK(img.bilinear(1.f, 1.5f) == doctest::Approx(0.5f));
  CHECK(img.bilinear(1.5f, 1.5f) == doctest::Approx(0.25f));
}

TEST_CASE("depth pgm roundtrip quantizes to millimetres") {
  DepthImage img(8, 4, 0.f);
  img.at(0, 0) = 1.2345f;
  img.at(3, 2) = 0.5004f;
  img.at(7, 3) = 70.f;  // beyond 16-bit mm, clamps
  const auto path = tmp_dir() / "depth.pgm";
  save_depth_pgm(path, img);
  const DepthImage back = load_depth_pgm(path);
  CHECK(back.width() == 8);
  CHECK(back.height() == 4);
  CHECK(back.at(0, 0) == doctest::Approx(1.235).epsilon(1e-4));  // lround(1234.5 mm)
  CHECK(back.at(3, 2) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(back.at(7, 3) == doctest::Approx(65.535));
  CHECK(back.at(1, 1) == 0.f);
}

TEST_CASE("gray and mask pgm roundtrip") {
  GrayImage g(5, 3, 0.25f);
  g.at(2, 1) = 1.f;
  const auto gp = tmp_dir() / "gray.pgm";
  save_gray_pgm(gp, g);
  const GrayImage gb = load_gray_pgm(gp);
  CHECK(gb.at(2, 1) == doctest::Approx(1.f));
  CHECK(gb.at(0, 0) == doctest::Approx(0.25f).epsilon(0.01));

  MaskImage m(5, 3, 0);
  m.at(4, 2) = 7;
  const auto mp = tmp_dir() / "mask.pgm";
  save_mask_pgm(mp, m);
  const MaskImage mb = load_mask_pgm(mp);
  CHECK(mb.at(4, 2) == 7);
  CHECK(mb.at(0, 0) == 0);
}

TEST_CASE("config parses sections, arrays and tables") {
  const std::string text = R"(
# comment
title = "demo scene"   # trailing comment
[camera]
width = 320
fx = 250.0
[noise]
depth_std = 0.005
enabled = true
ids = [1, 2, 3]
ranges = [0.5, 1.5]
[[object]]
shape = "sphere"
scale = 0.4
[[object]]
shape = "box"
)";
  const Config cfg = Config::parse_string(text);
  CHECK(cfg.get_string("title") == "demo scene");
  CHECK(cfg.get_int("camera.width", 0) == 320);
  CHECK(cfg.get_double("camera.fx", 0) == doctest::Approx(250.0));
  CHECK(cfg.get_double("noise.depth_std", 0) == doctest::Approx(0.005));
  CHECK(cfg.get_bool("noise.enabled", false));
  const auto ids = cfg.get_int_array("noise.ids");
  REQUIRE(ids.size() == 3);
  CHECK(ids[2] == 3);
  const auto ranges = cfg.get_double_array("noise.ranges");
  REQUIRE(ranges.size() == 2);
  CHECK(ranges[1] == doctest::Approx(1.5));
  const auto& objs = cfg.tables("object");
  REQUIRE(objs.size() == 2);
  CHECK(objs[0].get_string("shape") == "sphere");
  CHECK(objs[0].get_double("scale", 0) == doctest::Approx(0.4));
  CHECK(objs[1].get_string("shape") == "box");

  CHECK(cfg.get_int("missing.key", 9) == 9);
  CHECK_THROWS_AS(cfg.get_string("missing.key"), ValidationError);
}

TEST_CASE("config overrides replace file values") {
  Config cfg = Config::parse_string("a = 1\nb = \"x\"\n");
  cfg.set_raw("a", "2.5");
  cfg.set_string("b", "y");
  CHECK(cfg.get_double("a", 0) == doctest::Approx(2.5));
  CHECK(cfg.get_string("b") == "y");
}

TEST_CASE("grid3 node lattice and trilinear sampling") {
  Grid3f g(5, -1.f, 1.f, 0.f);
  CHECK(g.spacing() == doctest::Approx(0.5f));
  CHECK(g.node_position(0, 0, 0).isApprox(Eigen::Vector3f(-1, -1, -1)));
  CHECK(g.node_position(4, 2, 1).isApprox(Eigen::Vector3f(1, 0, -0.5)));

  g.at(2, 2, 2) = 1.f;
  CHECK(g.sample(Eigen::Vector3f(0, 0, 0)) == doctest::Approx(1.f));
  // midpoint between nodes (2,2,2)=1 and (3,2,2)=0
  CHECK(g.sample(Eigen::Vector3f(0.25f, 0, 0)) == doctest::Approx(0.5f));
  // x-fastest storage
  CHECK(g.index(1, 0, 0) == 1);
  CHECK(g.index(0, 1, 0) == 5);
  CHECK(g.index(0, 0, 1) == 25);
}

TEST_CASE("grid3 double-precision gradient matches finite differences") {
  Grid3f g(9, -1.f, 1.f, 0.f);
  Rng rng = make_rng(7);
  std::uniform_real_distribution<float> dist(-1.f, 1.f);
  for (auto& v : g.data()) v = dist(rng);

  std::uniform_real_distribution<double> pd(-0.95, 0.95);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d p(pd(rng), pd(rng), pd(rng));
    const Eigen::Vector3d grad = g.gradient(p);
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
      Eigen::Vector3d lo = p, hi = p;
      lo[a] -= h;
      hi[a] += h;
      const double fd = (g.sample(hi) - g.sample(lo)) / (2 * h);
      // FD across a cell boundary mixes two cells' slopes; skip those probes.
      const double cell = (p[a] + 1.0) / 0.25;
      if (std::abs(cell - std::round(cell)) < 1e-5) continue;
      CHECK(grad[a] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}
