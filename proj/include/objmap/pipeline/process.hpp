// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "objmap/pipeline/frame.hpp"
#include "objmap/pipeline/object_state.hpp"
#include "objmap/shape/posterior.hpp"
#include "objmap/shape/prior.hpp"
#include "objmap/synth/noise.hpp"
#include "objmap/track/baselines.hpp"
#include "objmap/track/solver.hpp"

namespace objmap {

// Per-object estimator. kFull is the joint pose+code pipeline; the rest are
// ablations and baselines sharing the same association and fusion plumbing.
enum class Method { kFull, kPriorOnly, kTsdfOnly, kIcp, kVo, kNocsInitOnly };
enum class CameraMode { kGt, kIcp };

Method parse_method(const std::string& name);
CameraMode parse_camera_mode(const std::string& name);
std::string method_name(Method method);

struct PipelineConfig {
  Method method = Method::kFull;
  CameraMode camera_mode = CameraMode::kGt;
  OptimizerConfig optimizer;
  NoiseModel noise;     // correspondence oracle corruption
  IcpConfig icp;
  VoConfig vo;
  double iou_threshold = 0.5;
  double lost_sdf_factor = 4.0;  // bad frame when mean |sdf| exceeds factor * sigma
  int lost_streak = 3;
  int min_detection_px = 30;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Objects whose scaled canonical box is in front of the camera and crossed by
// the frustum sampling: rays through the image center and corners, plus rays
// through the projected box corners (so small objects between the sampled
// rays still count).
std::vector<int> visible_objects(const WorldMap& map, const RigidTransform& camera,
                                 const CameraIntrinsics& intrinsics);

// Mask ids present in a frame with at least min_pixels support.
std::vector<int> detections_in_mask(const MaskImage& mask, int min_pixels);

struct Association {
  std::vector<std::pair<int, int>> matches;  // object id, detection id
  std::vector<int> unmatched;                // detection ids
};

// Greedy best-IoU matching between frame detections and rendered object
// masks; pairs below the threshold stay unmatched, each side used once.
Association associate_detections(const MaskImage& frame_mask,
                                 const std::vector<int>& detections,
                                 const std::map<int, MaskImage>& rendered,
                                 double iou_threshold);

struct ProcessReport {
  std::string log;  // line-delimited, ordered by object id within the frame
  std::vector<int> matched;
  std::vector<int> spawned;
  std::vector<int> lost_now;
  RigidTransform camera_pose;  // pose actually used for this frame
};

// One frame through the pipeline: camera pose acquisition, visibility and
// mask rendering, association, per-object tracking and fusion, new-object
// bootstrap from oracle correspondences. Per-object errors mark that object
// lost without failing the frame. `prior`/`posterior` may be null for
// methods that do not use the shape model; `prev_frame` feeds the vo
// baseline. `gt_objects` drives the correspondence oracle only.
ProcessReport process_frame(WorldMap& map, const Frame& frame, const LatentShapeModel* prior,
                            const PosteriorShapeModel* posterior,
                            const std::map<int, ObjectPose>& gt_objects,
                            const PipelineConfig& config, const Frame* prev_frame = nullptr);

}  // namespace objmap
