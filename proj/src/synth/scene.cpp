// SPDX-License-Identifier: Apache-2.0

#include "objmap/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "objmap/core/errors.hpp"
#include "objmap/core/parallel.hpp"
#include "objmap/geometry/aabb.hpp"
#include "objmap/render/raycast.hpp"

namespace objmap {

namespace {

constexpr std::uint32_t kShapeTag = 0x73687065;
constexpr std::uint32_t kMotionTag = 0x6d6f7476;
constexpr std::uint32_t kCameraTag = 0x63616d72;
constexpr std::uint32_t kNoiseTag = 0x6e6f6973;

constexpr double kFrameDt = 1.0 / 30.0;

// Hash-based value noise in [-1, 1]: C1 trilinear blend of per-cell uniforms.
double lattice_value(std::int64_t x, std::int64_t y, std::int64_t z) {
  const std::uint64_t h = mix_seed(static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ull ^
                                   static_cast<std::uint64_t>(y) * 0xbf58476d1ce4e5b9ull ^
                                   static_cast<std::uint64_t>(z) * 0x94d049bb133111ebull);
  return 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
}

double value_noise(const Eigen::Vector3d& p) {
  const Eigen::Vector3d f = p.array().floor();
  const std::int64_t ix = static_cast<std::int64_t>(f.x());
  const std::int64_t iy = static_cast<std::int64_t>(f.y());
  const std::int64_t iz = static_cast<std::int64_t>(f.z());
  Eigen::Vector3d t = p - f;
  // smoothstep weights keep the blend C1
  t = t.array() * t.array() * (3.0 - 2.0 * t.array());
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? t.x() : 1 - t.x()) * (dy ? t.y() : 1 - t.y()) *
                     (dz ? t.z() : 1 - t.z());
    acc += w * lattice_value(ix + dx, iy + dy, iz + dz);
  }
  return acc;
}

double albedo_at(const Eigen::Vector3d& p, int instance) {
  const Eigen::Vector3d shift(17.31 * instance, -9.21 * instance, 4.77 * instance);
  const double n =
      0.7 * value_noise(6.0 * p + shift) + 0.3 * value_noise(13.0 * p + 2.0 * shift);
  return std::clamp(0.55 + 0.3 * n, 0.05, 1.0);
}

Eigen::Vector3d numeric_normal(const ScalarField& field, const Eigen::Vector3d& p) {
  const double h = 2e-3;
  Eigen::Vector3d n;
  for (int a = 0; a < 3; ++a) {
    Eigen::Vector3d dp = Eigen::Vector3d::Zero();
    dp(a) = h;
    n(a) = field(p + dp) - field(p - dp);
  }
  const double len = n.norm();
  return len > 1e-12 ? Eigen::Vector3d(n / len) : Eigen::Vector3d(0, 0, 1);
}

struct PlacedObject {
  ScalarField world_sdf;
  ObjectPose pose;
  Aabb world_box;
};

}  // namespace

CameraIntrinsics SceneSpec::intrinsics() const {
  CameraIntrinsics cam;
  cam.width = width;
  cam.height = height;
  // Keep the default focal length's field of view at any resolution.
  cam.fx = 250.0 * width / 320.0;
  cam.fy = cam.fx;
  cam.cx = 0.5 * width - 0.5;
  cam.cy = 0.5 * height - 0.5;
  return cam;
}

SceneSpec parse_scene_spec(const Config& cfg) {
  SceneSpec spec;
  spec.width = static_cast<int>(cfg.get_int("scene.width", spec.width));
  spec.height = static_cast<int>(cfg.get_int("scene.height", spec.height));
  spec.frames = static_cast<int>(cfg.get_int("scene.frames", spec.frames));
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("scene.seed", 0));
  if (cfg.has("scene.light")) {
    const auto l = cfg.get_double_array("scene.light");
    if (l.size() != 3) throw ValidationError("scene.light needs 3 components");
    spec.light = Eigen::Vector3d(l[0], l[1], l[2]).normalized();
  }
  spec.floor_z = cfg.get_double("scene.floor_z", spec.floor_z);
  spec.depth_max = cfg.get_double("scene.depth_max", spec.depth_max);
  spec.camera_kind = cfg.get_string("scene.camera", spec.camera_kind);
  if (spec.camera_kind != "orbit" && spec.camera_kind != "viewpoints")
    throw ValidationError("scene.camera must be orbit or viewpoints");
  spec.camera_radius = cfg.get_double("scene.camera_radius", spec.camera_radius);
  spec.camera_elevation_deg =
      cfg.get_double("scene.camera_elevation_deg", spec.camera_elevation_deg);
  if (cfg.has("scene.camera_target")) {
    const auto t = cfg.get_double_array("scene.camera_target");
    if (t.size() != 3) throw ValidationError("scene.camera_target needs 3 components");
    spec.camera_target = Eigen::Vector3d(t[0], t[1], t[2]);
  }
  spec.camera_motion.rot_max_deg =
      cfg.get_double("scene.camera_rot_max_deg", spec.camera_motion.rot_max_deg);
  spec.camera_motion.trans_max =
      cfg.get_double("scene.camera_trans_max", spec.camera_motion.trans_max);

  spec.noise.depth_std = cfg.get_double("noise.depth_std", spec.noise.depth_std);
  spec.noise.depth_outlier_rate =
      cfg.get_double("noise.depth_outlier_rate", spec.noise.depth_outlier_rate);
  spec.noise.corr_std = cfg.get_double("noise.corr_std", spec.noise.corr_std);
  spec.noise.corr_outlier_rate =
      cfg.get_double("noise.corr_outlier_rate", spec.noise.corr_outlier_rate);
  spec.noise.confidence_noise_std =
      cfg.get_double("noise.confidence_noise_std", spec.noise.confidence_noise_std);
  spec.noise.mask_erode_px =
      static_cast<int>(cfg.get_int("noise.mask_erode_px", spec.noise.mask_erode_px));
  spec.noise.mask_dilate_px =
      static_cast<int>(cfg.get_int("noise.mask_dilate_px", spec.noise.mask_dilate_px));

  for (const Config& obj : cfg.tables("object")) {
    ObjectSpec o;
    o.category = obj.get_string("category", o.category);
    o.shape_seed = static_cast<std::uint64_t>(obj.get_int("shape_seed", 0));
    o.scale = obj.get_double("scale", o.scale);
    if (obj.has("position")) {
      const auto p = obj.get_double_array("position");
      if (p.size() != 3) throw ValidationError("object.position needs 3 components");
      o.position = Eigen::Vector3d(p[0], p[1], p[2]);
    }
    o.yaw_deg = obj.get_double("yaw_deg", o.yaw_deg);
    o.motion.rot_max_deg = obj.get_double("rot_max_deg", 0.0);
    o.motion.trans_max = obj.get_double("trans_max", 0.0);
    if (o.scale <= 0.0) throw ValidationError("object.scale must be positive");
    spec.objects.push_back(o);
  }
  if (spec.frames < 1) throw ValidationError("scene.frames must be >= 1");
  if (spec.objects.empty()) throw ValidationError("scene needs at least one [[object]]");
  return spec;
}

std::string serialize_scene_spec(const SceneSpec& spec) {
  std::ostringstream out;
  out.setf(std::ios::fmtflags(0), std::ios::floatfield);
  out.precision(12);
  out << "[scene]\n";
  out << "width = " << spec.width << "\n";
  out << "height = " << spec.height << "\n";
  out << "frames = " << spec.frames << "\n";
  out << "seed = " << spec.seed << "\n";
  out << "light = [" << spec.light.x() << ", " << spec.light.y() << ", " << spec.light.z()
      << "]\n";
  if (spec.has_floor()) out << "floor_z = " << spec.floor_z << "\n";
  out << "depth_max = " << spec.depth_max << "\n";
  out << "camera = \"" << spec.camera_kind << "\"\n";
  out << "camera_radius = " << spec.camera_radius << "\n";
  out << "camera_elevation_deg = " << spec.camera_elevation_deg << "\n";
  out << "camera_target = [" << spec.camera_target.x() << ", " << spec.camera_target.y()
      << ", " << spec.camera_target.z() << "]\n";
  out << "camera_rot_max_deg = " << spec.camera_motion.rot_max_deg << "\n";
  out << "camera_trans_max = " << spec.camera_motion.trans_max << "\n";
  out << "\n[noise]\n";
  out << "depth_std = " << spec.noise.depth_std << "\n";
  out << "depth_outlier_rate = " << spec.noise.depth_outlier_rate << "\n";
  out << "corr_std = " << spec.noise.corr_std << "\n";
  out << "corr_outlier_rate = " << spec.noise.corr_outlier_rate << "\n";
  out << "confidence_noise_std = " << spec.noise.confidence_noise_std << "\n";
  out << "mask_erode_px = " << spec.noise.mask_erode_px << "\n";
  out << "mask_dilate_px = " << spec.noise.mask_dilate_px << "\n";
  for (const ObjectSpec& o : spec.objects) {
    out << "\n[[object]]\n";
    out << "category = \"" << o.category << "\"\n";
    out << "shape_seed = " << o.shape_seed << "\n";
    out << "scale = " << o.scale << "\n";
    out << "position = [" << o.position.x() << ", " << o.position.y() << ", "
        << o.position.z() << "]\n";
    out << "yaw_deg = " << o.yaw_deg << "\n";
    out << "rot_max_deg = " << o.motion.rot_max_deg << "\n";
    out << "trans_max = " << o.motion.trans_max << "\n";
  }
  return out.str();
}

RenderedFrame render_frame(const SceneSpec& spec, const std::vector<SynthShape>& shapes,
                           const std::vector<ObjectPose>& object_poses,
                           const RigidTransform& camera) {
  const CameraIntrinsics cam = spec.intrinsics();
  RenderedFrame out;
  out.depth = DepthImage(cam.width, cam.height, 0.f);
  out.intensity = GrayImage(cam.width, cam.height, 0.f);
  out.mask = MaskImage(cam.width, cam.height, 0);

  std::vector<PlacedObject> placed(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const ObjectPose pose = object_poses[i];
    const ScalarField& sdf = shapes[i].sdf;
    placed[i].pose = pose;
    placed[i].world_sdf = [pose, &sdf](const Eigen::Vector3d& p) {
      return pose.scale * sdf(pose.to_canonical(p));
    };
    // World AABB of the scaled canonical cube.
    Eigen::Vector3d lo = pose.g.t, hi = pose.g.t;
    for (int c = 0; c < 8; ++c) {
      const Eigen::Vector3d corner(c & 1 ? 1 : -1, c & 2 ? 1 : -1, c & 4 ? 1 : -1);
      const Eigen::Vector3d w = pose.to_world(corner);
      lo = lo.cwiseMin(w);
      hi = hi.cwiseMax(w);
    }
    placed[i].world_box = Aabb{lo, hi};
  }

  const Eigen::Vector3d origin = camera.t;
  const Eigen::Vector3d light = -spec.light;  // toward the source
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Eigen::Vector3d ray_cam = cam.ray(u, v);
      const double n = ray_cam.norm();
      const Eigen::Vector3d dir = camera.R * (ray_cam / n);

      double best_t = std::numeric_limits<double>::infinity();
      int best_id = 0;
      if (spec.has_floor() && std::abs(dir.z()) > 1e-9) {
        const double t = (spec.floor_z - origin.z()) / dir.z();
        if (t > 0.0) best_t = t;
      }
      for (std::size_t i = 0; i < placed.size(); ++i) {
        double t0 = 0.0, t1 = 0.0;
        if (!ray_aabb_intersect(origin, dir, placed[i].world_box, t0, t1)) continue;
        if (t0 >= best_t) continue;
        const auto hit =
            raycast_sdf(placed[i].world_sdf, origin, dir, std::max(t0, 1e-3), t1);
        if (hit && *hit < best_t) {
          best_t = *hit;
          best_id = static_cast<int>(i) + 1;
        }
      }
      if (!std::isfinite(best_t)) continue;

      const Eigen::Vector3d p = origin + best_t * dir;
      Eigen::Vector3d normal;
      double albedo;
      if (best_id == 0) {
        normal = Eigen::Vector3d(0, 0, 1);
        albedo = albedo_at(Eigen::Vector3d(p.x(), p.y(), 0.0), 0);
      } else {
        const PlacedObject& po = placed[static_cast<std::size_t>(best_id - 1)];
        normal = numeric_normal(po.world_sdf, p);
        albedo = albedo_at(po.pose.to_canonical(p), best_id);
      }
      const double lambert = std::max(0.0, normal.dot(light));
      const double z = best_t / n;
      // Beyond-range surfaces stay visible to the color camera but return no
      // depth, like a range-limited sensor.
      out.depth.at(u, v) = z <= spec.depth_max ? static_cast<float>(z) : 0.f;
      out.intensity.at(u, v) = static_cast<float>(std::clamp(albedo * (0.25 + 0.75 * lambert),
                                                             0.0, 1.0));
      out.mask.at(u, v) = static_cast<std::uint8_t>(best_id);
    }
  }
  return out;
}

namespace {

MaskImage morph(const MaskImage& mask, int radius, bool dilate) {
  if (radius <= 0) return mask;
  MaskImage out(mask.width(), mask.height(), 0);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      const std::uint8_t id = mask.at(x, y);
      if (dilate) {
        // Grow every nonzero label; ties go to the smaller id for determinism.
        std::uint8_t best = 0;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = x + dx, yy = y + dy;
            if (!mask.in_bounds(xx, yy)) continue;
            const std::uint8_t m = mask.at(xx, yy);
            if (m != 0 && (best == 0 || m < best)) best = m;
          }
        out.at(x, y) = best;
      } else {
        if (id == 0) continue;
        bool keep = true;
        for (int dy = -radius; dy <= radius && keep; ++dy)
          for (int dx = -radius; dx <= radius && keep; ++dx) {
            const int xx = x + dx, yy = y + dy;
            if (!mask.in_bounds(xx, yy) || mask.at(xx, yy) != id) keep = false;
          }
        out.at(x, y) = keep ? id : 0;
      }
    }
  return out;
}

}  // namespace

void corrupt_frame(RenderedFrame& frame, const NoiseModel& noise, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int y = 0; y < frame.depth.height(); ++y)
    for (int x = 0; x < frame.depth.width(); ++x) {
      float& d = frame.depth.at(x, y);
      if (d <= 0.f) continue;
      if (noise.depth_outlier_rate > 0.0 && uni(rng) < noise.depth_outlier_rate) {
        d = static_cast<float>(0.3 + 4.7 * uni(rng));
      } else if (noise.depth_std > 0.0) {
        d = static_cast<float>(std::max(0.0, d + noise.depth_std * gauss(rng)));
      }
    }
  if (noise.mask_erode_px > 0) frame.mask = morph(frame.mask, noise.mask_erode_px, false);
  if (noise.mask_dilate_px > 0) frame.mask = morph(frame.mask, noise.mask_dilate_px, true);
}

SceneGroundTruth generate_scene(const SceneSpec& spec, const std::filesystem::path& dir,
                                int threads) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "depth");
  fs::create_directories(dir / "intensity");
  fs::create_directories(dir / "mask");
  fs::create_directories(dir / "gt");

  {
    std::ofstream out(dir / "scene.toml", std::ios::binary);
    out << serialize_scene_spec(spec);
  }

  std::vector<SynthShape> shapes;
  for (const ObjectSpec& o : spec.objects) {
    auto rng = make_rng(substream(spec.seed, kShapeTag, o.shape_seed));
    shapes.push_back(generate_shape(o.category, rng));
  }

  // Camera trajectory.
  std::vector<RigidTransform> camera;
  if (spec.camera_kind == "viewpoints") {
    auto rng = make_rng(substream(spec.seed, kCameraTag));
    camera = sample_viewpoints(spec.frames, spec.camera_radius, spec.camera_target, rng);
  } else {
    const double el = spec.camera_elevation_deg * M_PI / 180.0;
    const Eigen::Vector3d eye =
        spec.camera_target +
        spec.camera_radius * Eigen::Vector3d(std::cos(el), 0.0, std::sin(el));
    auto rng = make_rng(substream(spec.seed, kCameraTag));
    camera = sample_motion(look_at(eye, spec.camera_target), spec.camera_motion, spec.frames,
                           rng);
  }

  // Object trajectories.
  std::vector<std::vector<RigidTransform>> motion(spec.objects.size());
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const ObjectSpec& o = spec.objects[i];
    RigidTransform initial;
    initial.R = Eigen::AngleAxisd(o.yaw_deg * M_PI / 180.0, Eigen::Vector3d::UnitZ())
                    .toRotationMatrix();
    initial.t = o.position;
    auto rng = make_rng(substream(spec.seed, kMotionTag, static_cast<std::uint64_t>(i)));
    motion[i] = sample_motion(initial, o.motion, spec.frames, rng);
  }

  SceneGroundTruth gt;
  for (int f = 0; f < spec.frames; ++f) {
    gt.camera.push_back({f * kFrameDt, ObjectPose{camera[static_cast<std::size_t>(f)], 1.0}});
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
      ObjectPose pose{motion[i][static_cast<std::size_t>(f)], spec.objects[i].scale};
      gt.objects[static_cast<int>(i) + 1].push_back({f * kFrameDt, pose});
    }
  }
  for (std::size_t i = 0; i < shapes.size(); ++i)
    gt.shapes[static_cast<int>(i) + 1] = shapes[i].mesh;

  parallel_for(static_cast<std::size_t>(spec.frames), threads, [&](std::size_t f) {
    std::vector<ObjectPose> poses;
    for (std::size_t i = 0; i < spec.objects.size(); ++i)
      poses.push_back(ObjectPose{motion[i][f], spec.objects[i].scale});
    RenderedFrame frame = render_frame(spec, shapes, poses, camera[f]);
    auto rng = make_rng(substream(spec.seed, kNoiseTag, static_cast<std::uint64_t>(f)));
    corrupt_frame(frame, spec.noise, rng);

    char name[16];
    std::snprintf(name, sizeof(name), "%06zu.pgm", f);
    save_depth_pgm(dir / "depth" / name, frame.depth);
    save_gray_pgm(dir / "intensity" / name, frame.intensity);
    save_mask_pgm(dir / "mask" / name, frame.mask);
  });

  save_trajectory(dir / "gt" / "trajectory_cam.txt", gt.camera);
  for (const auto& [id, traj] : gt.objects)
    save_trajectory(dir / "gt" / ("trajectory_obj_" + std::to_string(id) + ".txt"), traj);
  for (const auto& [id, mesh] : gt.shapes)
    save_ply(dir / "gt" / ("shape_" + std::to_string(id) + ".ply"), mesh);
  return gt;
}

Scene Scene::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir / "scene.toml"))
    throw ValidationError("not a scene directory (no scene.toml): " + dir.string());
  Scene scene;
  scene.dir_ = dir;
  scene.spec_ = parse_scene_spec(Config::parse_file(dir / "scene.toml"));
  scene.gt_.camera = load_trajectory(dir / "gt" / "trajectory_cam.txt");
  for (std::size_t i = 0; i < scene.spec_.objects.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    scene.gt_.objects[id] =
        load_trajectory(dir / "gt" / ("trajectory_obj_" + std::to_string(id) + ".txt"));
    const fs::path mesh_path = dir / "gt" / ("shape_" + std::to_string(id) + ".ply");
    if (fs::exists(mesh_path)) scene.gt_.shapes[id] = load_ply(mesh_path);
  }
  const int n = static_cast<int>(scene.gt_.camera.size());
  for (int f = 0; f < n; ++f) scene.frame_ids_.push_back(f);
  return scene;
}

Frame Scene::frame(int i) const {
  const int id = frame_id(i);
  char name[16];
  std::snprintf(name, sizeof(name), "%06d.pgm", id);
  Frame f;
  f.index = id;
  f.timestamp = gt_.camera[static_cast<std::size_t>(i)].timestamp;
  f.depth = load_depth_pgm(dir_ / "depth" / name);
  f.intensity = load_gray_pgm(dir_ / "intensity" / name);
  f.mask = load_mask_pgm(dir_ / "mask" / name);
  f.camera_pose = gt_.camera[static_cast<std::size_t>(i)].pose.g;
  f.intrinsics = spec_.intrinsics();
  return f;
}

const TimedPose& Scene::gt_object(int id, int i) const {
  const auto it = gt_.objects.find(id);
  if (it == gt_.objects.end())
    throw ValidationError("no ground truth for object " + std::to_string(id));
  return it->second[static_cast<std::size_t>(i)];
}

Scene Scene::subsample(int k) const {
  if (k < 1) throw ValidationError("subsample interval must be >= 1");
  if (k == 1) return *this;
  Scene out;
  out.dir_ = dir_;
  out.spec_ = spec_;
  for (std::size_t i = 0; i < frame_ids_.size(); i += static_cast<std::size_t>(k)) {
    out.frame_ids_.push_back(frame_ids_[i]);
    out.gt_.camera.push_back(gt_.camera[i]);
    for (const auto& [id, traj] : gt_.objects) out.gt_.objects[id].push_back(traj[i]);
  }
  out.gt_.shapes = gt_.shapes;
  return out;
}

}  // namespace objmap
