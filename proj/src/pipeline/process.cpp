// SPDX-License-Identifier: Apache-2.0

#include "objmap/pipeline/process.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "objmap/core/errors.hpp"
#include "objmap/core/parallel.hpp"
#include "objmap/core/rng.hpp"
#include "objmap/geometry/aabb.hpp"
#include "objmap/render/render.hpp"
#include "objmap/track/correspondence.hpp"
#include "objmap/track/stages.hpp"

namespace objmap {

namespace {

constexpr std::uint32_t kTrackTag = 0x7472636b;
constexpr std::uint32_t kSpawnTag = 0x7370776e;

Aabb world_box(const ObjectPose& pose) {
  Aabb box;
  for (int c = 0; c < 8; ++c)
    box.expand(pose.to_world(Eigen::Vector3d(c & 1 ? 1 : -1, c & 2 ? 1 : -1, c & 4 ? 1 : -1)));
  return box;
}

std::string stage_line(int frame, int object, const char* stage, const StageResult& result) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "frame=%d object=%d stage=%s iters=%d cost0=%.6g cost1=%.6g\n",
                frame, object, stage, result.report.iterations, result.report.initial_cost(),
                result.report.final_cost());
  return buf;
}

std::string event_line(int frame, int object, const char* event) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "frame=%d object=%d event=%s\n", frame, object, event);
  return buf;
}

// Masked depth pixels back-projected to world, strided down to a cap.
std::vector<Eigen::Vector3d> masked_world_points(const Frame& frame, std::uint8_t object_id,
                                                 const RigidTransform& camera, int cap) {
  std::vector<Eigen::Vector3d> points;
  int count = 0;
  for (int v = 0; v < frame.depth.height(); ++v)
    for (int u = 0; u < frame.depth.width(); ++u)
      count += frame.mask.at(u, v) == object_id && frame.depth.at(u, v) > 0.f;
  const int stride = std::max(1, count / std::max(1, cap));
  int seen = 0;
  for (int v = 0; v < frame.depth.height(); ++v)
    for (int u = 0; u < frame.depth.width(); ++u) {
      if (frame.mask.at(u, v) != object_id || frame.depth.at(u, v) <= 0.f) continue;
      if (seen++ % stride != 0) continue;
      const Eigen::Vector3d p_cam =
          static_cast<double>(frame.depth.at(u, v)) * frame.intrinsics.ray(u, v);
      points.push_back(camera.apply(p_cam));
    }
  return points;
}

// Camera-frame points over the background (mask id 0) for camera ICP.
std::vector<Eigen::Vector3d> background_camera_points(const Frame& frame, int cap) {
  std::vector<Eigen::Vector3d> points;
  int count = 0;
  for (int v = 0; v < frame.depth.height(); ++v)
    for (int u = 0; u < frame.depth.width(); ++u)
      count += frame.mask.at(u, v) == 0 && frame.depth.at(u, v) > 0.f;
  const int stride = std::max(1, count / std::max(1, cap));
  int seen = 0;
  for (int v = 0; v < frame.depth.height(); ++v)
    for (int u = 0; u < frame.depth.width(); ++u) {
      if (frame.mask.at(u, v) != 0 || frame.depth.at(u, v) <= 0.f) continue;
      if (seen++ % stride != 0) continue;
      points.push_back(static_cast<double>(frame.depth.at(u, v)) * frame.intrinsics.ray(u, v));
    }
  return points;
}

ScalarField silhouette_field(const ObjectState& state, const LatentShapeModel* prior,
                             const PosteriorShapeModel* posterior) {
  if (prior && posterior) {
    // Measured-prior blend without the correction term: cheap and stable for
    // association masks.
    const Eigen::VectorXd z1 = Eigen::VectorXd::Zero(posterior->correction_dim());
    const Eigen::VectorXd z0 = state.z0;
    const TsdfVolume* volume = &state.volume;
    return [volume, prior, posterior, z0, z1](const Eigen::Vector3d& p) {
      return posterior->occupancy(*volume, *prior, p, z0, z1).o;
    };
  }
  const TsdfVolume* volume = &state.volume;
  return [volume](const Eigen::Vector3d& p) {
    return sdf_to_occupancy(volume->sample_trilinear(p).first, 0.05, 0.5);
  };
}

struct TrackOutcome {
  std::string log;
  bool bad = false;   // high residual or stage failure
  bool fused = true;  // integrate this frame
};

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "full") return Method::kFull;
  if (name == "prior_only") return Method::kPriorOnly;
  if (name == "tsdf_only") return Method::kTsdfOnly;
  if (name == "icp") return Method::kIcp;
  if (name == "vo") return Method::kVo;
  if (name == "nocs_init_only") return Method::kNocsInitOnly;
  throw ValidationError("unknown method: " + name);
}

CameraMode parse_camera_mode(const std::string& name) {
  if (name == "gt") return CameraMode::kGt;
  if (name == "icp") return CameraMode::kIcp;
  throw ValidationError("unknown camera mode: " + name);
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kFull: return "full";
    case Method::kPriorOnly: return "prior_only";
    case Method::kTsdfOnly: return "tsdf_only";
    case Method::kIcp: return "icp";
    case Method::kVo: return "vo";
    case Method::kNocsInitOnly: return "nocs_init_only";
  }
  return "unknown";
}

std::vector<int> visible_objects(const WorldMap& map, const RigidTransform& camera,
                                 const CameraIntrinsics& intrinsics) {
  std::vector<int> visible;
  const Eigen::Vector3d origin = camera.t;
  const int w = intrinsics.width, h = intrinsics.height;
  const std::array<Eigen::Vector2d, 5> probes = {
      Eigen::Vector2d(0.5 * (w - 1), 0.5 * (h - 1)), Eigen::Vector2d(0, 0),
      Eigen::Vector2d(w - 1, 0), Eigen::Vector2d(0, h - 1), Eigen::Vector2d(w - 1, h - 1)};
  for (const auto& [id, state] : map.objects) {
    const Aabb box = world_box(state.pose);
    bool seen = false;
    for (const auto& px : probes) {
      const Eigen::Vector3d dir = camera.R * intrinsics.ray(px.x(), px.y()).normalized();
      double t0 = 0, t1 = 0;
      if (ray_aabb_intersect(origin, dir, box, t0, t1) && t1 > 0) {
        seen = true;
        break;
      }
    }
    if (!seen) {
      // Rays through the projected box corners catch objects that fall
      // between the five probes.
      for (int c = 0; c < 9 && !seen; ++c) {
        const Eigen::Vector3d p =
            c == 8 ? box.center()
                   : Eigen::Vector3d(c & 1 ? box.max.x() : box.min.x(),
                                     c & 2 ? box.max.y() : box.min.y(),
                                     c & 4 ? box.max.z() : box.min.z());
        const Eigen::Vector3d q = camera.R.transpose() * (p - origin);
        if (q.z() <= 1e-9) continue;
        const double u = intrinsics.fx * q.x() / q.z() + intrinsics.cx;
        const double v = intrinsics.fy * q.y() / q.z() + intrinsics.cy;
        seen = u >= 0 && u <= w - 1 && v >= 0 && v <= h - 1;
      }
    }
    if (seen) visible.push_back(id);
  }
  return visible;
}

std::vector<int> detections_in_mask(const MaskImage& mask, int min_pixels) {
  std::array<int, 256> counts{};
  for (int v = 0; v < mask.height(); ++v)
    for (int u = 0; u < mask.width(); ++u) ++counts[mask.at(u, v)];
  std::vector<int> ids;
  for (int id = 1; id < 256; ++id)
    if (counts[static_cast<std::size_t>(id)] >= min_pixels) ids.push_back(id);
  return ids;
}

Association associate_detections(const MaskImage& frame_mask, const std::vector<int>& detections,
                                 const std::map<int, MaskImage>& rendered,
                                 double iou_threshold) {
  struct Pair {
    double iou;
    int object, detection;
  };
  std::vector<Pair> pairs;
  for (const auto& [oid, mask] : rendered) {
    for (const int did : detections) {
      long inter = 0, union_px = 0;
      for (int v = 0; v < frame_mask.height(); ++v)
        for (int u = 0; u < frame_mask.width(); ++u) {
          const bool in_det = frame_mask.at(u, v) == did;
          const bool in_obj = mask.at(u, v) != 0;
          inter += in_det && in_obj;
          union_px += in_det || in_obj;
        }
      if (union_px == 0) continue;
      const double iou = static_cast<double>(inter) / static_cast<double>(union_px);
      if (iou >= iou_threshold) pairs.push_back({iou, oid, did});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.object != b.object) return a.object < b.object;
    return a.detection < b.detection;
  });
  Association out;
  std::array<bool, 256> object_used{}, detection_used{};
  for (const Pair& p : pairs) {
    if (object_used[static_cast<std::size_t>(p.object)] ||
        detection_used[static_cast<std::size_t>(p.detection)])
      continue;
    object_used[static_cast<std::size_t>(p.object)] = true;
    detection_used[static_cast<std::size_t>(p.detection)] = true;
    out.matches.emplace_back(p.object, p.detection);
  }
  for (const int did : detections)
    if (!detection_used[static_cast<std::size_t>(did)]) out.unmatched.push_back(did);
  std::sort(out.matches.begin(), out.matches.end());
  return out;
}

namespace {

TrackOutcome track_matched(ObjectState& state, const Frame& frame, std::uint8_t detection_id,
                           const LatentShapeModel* prior, const PosteriorShapeModel* posterior,
                           const ObjectPose* gt_pose, const PipelineConfig& cfg,
                           const Frame* prev_frame) {
  TrackOutcome out;
  const int fid = frame.index;
  try {
    switch (cfg.method) {
      case Method::kFull: {
        const StageResult coarse = coarse_estimate(
            frame, detection_id, *prior, state.pose, state.z0, !state.scale_frozen,
            cfg.optimizer, substream(cfg.seed, kTrackTag, fid, state.id, 0));
        state.scale_frozen = true;
        out.log += stage_line(fid, state.id, "coarse", coarse);
        out.bad = coarse.mean_abs_sdf > cfg.lost_sdf_factor * cfg.optimizer.sigma;
        const StageResult dense = dense_refine(
            frame, detection_id, state.volume, *prior, *posterior, state.pose, state.z0,
            state.z1, cfg.optimizer, substream(cfg.seed, kTrackTag, fid, state.id, 1));
        out.log += stage_line(fid, state.id, "dense", dense);
        break;
      }
      case Method::kPriorOnly: {
        const StageResult coarse = prior_only_track(
            frame, detection_id, *prior, state.pose, state.z0, !state.scale_frozen,
            cfg.optimizer, substream(cfg.seed, kTrackTag, fid, state.id, 0));
        state.scale_frozen = true;
        out.log += stage_line(fid, state.id, "coarse", coarse);
        out.bad = coarse.mean_abs_sdf > cfg.lost_sdf_factor * cfg.optimizer.sigma;
        break;
      }
      case Method::kTsdfOnly:
      case Method::kIcp: {
        const auto points =
            masked_world_points(frame, detection_id, frame.camera_pose, cfg.optimizer.sdf_max_points);
        state.pose.g = icp_point_to_plane(points, state.volume, state.pose, cfg.icp);
        out.log += event_line(fid, state.id, "icp");
        break;
      }
      case Method::kVo: {
        if (prev_frame) {
          const RigidTransform delta = rgbd_vo_photometric(*prev_frame, frame, detection_id,
                                                           RigidTransform::identity(), cfg.vo);
          state.pose.g = delta * state.pose.g;
        }
        out.log += event_line(fid, state.id, "vo");
        break;
      }
      case Method::kNocsInitOnly: {
        if (!gt_pose) throw InsufficientDataError("no oracle pose for re-initialization");
        auto rng = make_rng(substream(cfg.seed, kTrackTag, fid, state.id, 0));
        const CorrespondenceSet corr = predict_correspondences(
            frame.depth, frame.mask, detection_id, frame.intrinsics, frame.camera_pose,
            *gt_pose, cfg.noise, rng);
        const ObjectPose in_camera = umeyama_align(corr);
        state.pose.g = frame.camera_pose * in_camera.g;
        state.pose.scale = in_camera.scale;
        out.log += event_line(fid, state.id, "nocs");
        break;
      }
    }
  } catch (const Error& err) {
    out.log += event_line(fid, state.id, "error");
    out.bad = true;
    out.fused = false;
  }
  return out;
}

}  // namespace

ProcessReport process_frame(WorldMap& map, const Frame& input, const LatentShapeModel* prior,
                            const PosteriorShapeModel* posterior,
                            const std::map<int, ObjectPose>& gt_objects,
                            const PipelineConfig& cfg, const Frame* prev_frame) {
  if ((cfg.method == Method::kFull || cfg.method == Method::kPriorOnly) &&
      (prior == nullptr || (cfg.method == Method::kFull && posterior == nullptr)))
    throw ValidationError("method requires a shape prior");

  ProcessReport report;
  Frame frame = input;

  // Camera pose: ground truth, or point-to-plane ICP against the fused
  // background volume (bootstrapped from the first frame's given pose).
  if (cfg.camera_mode == CameraMode::kIcp) {
    if (!map.background) {
      map.background.emplace(96, 0.25f, 64.f, -3.f, 3.f);
    } else {
      const RigidTransform prev_cam =
          map.camera.empty() ? frame.camera_pose : map.camera.back().pose.g;
      try {
        const auto points = background_camera_points(frame, 4096);
        const ObjectPose initial{prev_cam.inverse(), 1.0};
        frame.camera_pose =
            icp_point_to_plane(points, *map.background, initial, cfg.icp).inverse();
      } catch (const Error& err) {
        frame.camera_pose = prev_cam;
        report.log += event_line(frame.index, 0, "camera_fallback");
      }
    }
    map.background->integrate_depth(frame.depth, &frame.mask, 0, ObjectPose{},
                                    frame.camera_pose, frame.intrinsics);
  }
  report.camera_pose = frame.camera_pose;
  map.camera.push_back({frame.timestamp, ObjectPose{frame.camera_pose, 1.0}});

  // Visibility, mask rendering, association.
  const std::vector<int> detections = detections_in_mask(frame.mask, cfg.min_detection_px);
  const std::vector<int> visible = visible_objects(map, frame.camera_pose, frame.intrinsics);
  std::map<int, MaskImage> rendered;
  {
    std::vector<MaskImage> masks(visible.size());
    parallel_for(visible.size(), cfg.threads, [&](std::size_t i) {
      const ObjectState& state = map.objects.at(visible[i]);
      masks[i] = render_mask(silhouette_field(state, prior, posterior), state.pose,
                             frame.camera_pose, frame.intrinsics);
    });
    for (std::size_t i = 0; i < visible.size(); ++i)
      rendered.emplace(visible[i], std::move(masks[i]));
  }
  const Association assoc =
      associate_detections(frame.mask, detections, rendered, cfg.iou_threshold);

  // Matched objects: track and fuse in parallel (states are disjoint).
  std::vector<std::string> match_logs(assoc.matches.size());
  std::vector<int> lost_ids;
  {
    std::vector<int> lost_flags(assoc.matches.size(), 0);
    parallel_for(assoc.matches.size(), cfg.threads, [&](std::size_t i) {
      const auto [oid, did] = assoc.matches[i];
      ObjectState& state = map.objects.at(oid);
      if (state.status == ObjectStatus::kLost) {
        match_logs[i] = event_line(frame.index, oid, "absorbed");
        state.track.push_back({frame.timestamp, state.pose});
        return;
      }
      const auto gt_it = gt_objects.find(oid);
      TrackOutcome outcome =
          track_matched(state, frame, static_cast<std::uint8_t>(did), prior, posterior,
                        gt_it == gt_objects.end() ? nullptr : &gt_it->second, cfg, prev_frame);
      state.bad_streak = outcome.bad ? state.bad_streak + 1 : 0;
      if (state.bad_streak >= cfg.lost_streak) {
        state.status = ObjectStatus::kLost;
        outcome.log += event_line(frame.index, oid, "lost");
        lost_flags[i] = 1;
      } else {
        state.status = ObjectStatus::kActive;
        if (outcome.fused)
          state.volume.integrate_depth(frame.depth, &frame.mask,
                                       static_cast<std::uint8_t>(did), state.pose,
                                       frame.camera_pose, frame.intrinsics);
      }
      state.last_seen = frame.index;
      state.track.push_back({frame.timestamp, state.pose});
      match_logs[i] = outcome.log;
    });
    for (std::size_t i = 0; i < assoc.matches.size(); ++i) {
      report.log += match_logs[i];
      report.matched.push_back(assoc.matches[i].first);
      if (lost_flags[i]) lost_ids.push_back(assoc.matches[i].first);
    }
  }

  // Unmatched detections: bootstrap new objects from oracle correspondences.
  for (const int did : assoc.unmatched) {
    if (map.objects.count(did)) {
      // The id already exists but its rendered mask no longer overlaps; the
      // detection is absorbed so the object cannot respawn as a duplicate.
      ObjectState& state = map.objects.at(did);
      report.log += event_line(frame.index, did, "absorbed");
      state.track.push_back({frame.timestamp, state.pose});
      continue;
    }
    const auto gt_it = gt_objects.find(did);
    if (gt_it == gt_objects.end()) {
      report.log += event_line(frame.index, did, "skip");
      continue;
    }
    try {
      auto rng = make_rng(substream(cfg.seed, kSpawnTag, frame.index, did));
      const CorrespondenceSet corr = predict_correspondences(
          frame.depth, frame.mask, static_cast<std::uint8_t>(did), frame.intrinsics,
          frame.camera_pose, gt_it->second, cfg.noise, rng);
      const ObjectPose in_camera = umeyama_align(corr);

      ObjectState state;
      state.id = did;
      state.pose.g = frame.camera_pose * in_camera.g;
      state.pose.scale = in_camera.scale;
      if (prior) state.z0 = Eigen::VectorXd::Zero(prior->latent_dim());
      if (posterior) state.z1 = Eigen::VectorXd::Zero(posterior->correction_dim());
      report.log += event_line(frame.index, did, "new");

      if (cfg.method == Method::kFull) {
        const StageResult coarse =
            coarse_estimate(frame, static_cast<std::uint8_t>(did), *prior, state.pose,
                            state.z0, true, cfg.optimizer,
                            substream(cfg.seed, kSpawnTag, frame.index, did, 0));
        state.scale_frozen = true;
        report.log += stage_line(frame.index, did, "coarse", coarse);
        const StageResult dense = dense_refine(
            frame, static_cast<std::uint8_t>(did), state.volume, *prior, *posterior,
            state.pose, state.z0, state.z1, cfg.optimizer,
            substream(cfg.seed, kSpawnTag, frame.index, did, 1));
        report.log += stage_line(frame.index, did, "dense", dense);
      } else if (cfg.method == Method::kPriorOnly) {
        const StageResult coarse = prior_only_track(
            frame, static_cast<std::uint8_t>(did), *prior, state.pose, state.z0, true,
            cfg.optimizer, substream(cfg.seed, kSpawnTag, frame.index, did, 0));
        state.scale_frozen = true;
        report.log += stage_line(frame.index, did, "coarse", coarse);
      } else {
        state.scale_frozen = true;
      }

      state.status = ObjectStatus::kNew;
      state.last_seen = frame.index;
      state.volume.integrate_depth(frame.depth, &frame.mask, static_cast<std::uint8_t>(did),
                                   state.pose, frame.camera_pose, frame.intrinsics);
      state.track.push_back({frame.timestamp, state.pose});
      map.objects.emplace(did, std::move(state));
      report.spawned.push_back(did);
    } catch (const Error& err) {
      report.log += event_line(frame.index, did, "skip");
    }
  }

  // Objects that saw no detection this frame keep their last pose on record.
  for (auto& [oid, state] : map.objects) {
    if (state.track.empty() || state.track.back().timestamp != frame.timestamp)
      state.track.push_back({frame.timestamp, state.pose});
  }
  report.lost_now = lost_ids;
  return report;
}

}  // namespace objmap
