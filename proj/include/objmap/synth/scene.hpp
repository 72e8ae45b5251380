// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "objmap/core/config.hpp"
#include "objmap/geometry/camera.hpp"
#include "objmap/geometry/trajectory.hpp"
#include "objmap/pipeline/frame.hpp"
#include "objmap/synth/motion.hpp"
#include "objmap/synth/noise.hpp"
#include "objmap/synth/shapes.hpp"

namespace objmap {

// One rendered object: a canonical shape drawn from `category` with
// `shape_seed`, placed at `position` with a yaw about +z, moving per `motion`
// (zero bounds = static). Instance ids are assigned 1..N in declaration order.
struct ObjectSpec {
  std::string category = "chair";
  std::uint64_t shape_seed = 0;
  double scale = 0.4;
  Eigen::Vector3d position{0, 0, 0};
  double yaw_deg = 0.0;
  MotionSpec motion{0.0, 0.0, 9};
};

struct SceneSpec {
  int width = 320;
  int height = 240;
  int frames = 200;
  std::uint64_t seed = 0;
  Eigen::Vector3d light = Eigen::Vector3d(-0.4, -0.3, -0.85).normalized();
  double floor_z = std::numeric_limits<double>::quiet_NaN();  // NaN = no floor
  double depth_max = 10.0;  // sensor range; farther hits keep shading, lose depth
  std::string camera_kind = "orbit";  // "orbit" | "viewpoints"
  double camera_radius = 1.6;
  double camera_elevation_deg = 20.0;  // orbit start elevation
  Eigen::Vector3d camera_target{0, 0, 0};
  MotionSpec camera_motion{0.3, 0.003, 9};
  NoiseModel noise;
  std::vector<ObjectSpec> objects;

  CameraIntrinsics intrinsics() const;
  bool has_floor() const { return std::isfinite(floor_z); }
};

SceneSpec parse_scene_spec(const Config& cfg);
std::string serialize_scene_spec(const SceneSpec& spec);

struct SceneGroundTruth {
  Trajectory camera;                 // scale always 1
  std::map<int, Trajectory> objects;  // instance id -> per-frame pose
  std::map<int, TriMesh> shapes;      // canonical meshes
};

// Noise-free geometry of one frame given resolved poses.
struct RenderedFrame {
  DepthImage depth;
  GrayImage intensity;
  MaskImage mask;
};

RenderedFrame render_frame(const SceneSpec& spec, const std::vector<SynthShape>& shapes,
                           const std::vector<ObjectPose>& object_poses,
                           const RigidTransform& camera);

void corrupt_frame(RenderedFrame& frame, const NoiseModel& noise, Rng& rng);

// Renders the whole scene into `dir`: scene.toml, depth/intensity/mask PGM
// streams, and the gt/ bundle (camera + per-object trajectories, canonical
// shape meshes). Rerunning with the same spec is byte-identical.
SceneGroundTruth generate_scene(const SceneSpec& spec, const std::filesystem::path& dir,
                                int threads = 1);

// Reader over a generated scene directory. Frames load on demand.
class Scene {
 public:
  static Scene load(const std::filesystem::path& dir);

  const SceneSpec& spec() const { return spec_; }
  const SceneGroundTruth& gt() const { return gt_; }
  int frame_count() const { return static_cast<int>(frame_ids_.size()); }
  // Original frame index of position i (subsampling keeps ids).
  int frame_id(int i) const { return frame_ids_[static_cast<std::size_t>(i)]; }
  Frame frame(int i) const;

  // GT pose of object `id` at position i.
  const TimedPose& gt_object(int id, int i) const;

  // Keeps positions 0, k, 2k, ... consistently across frames and ground truth.
  Scene subsample(int k) const;

 private:
  std::filesystem::path dir_;
  SceneSpec spec_;
  SceneGroundTruth gt_;
  std::vector<int> frame_ids_;
};

}  // namespace objmap
