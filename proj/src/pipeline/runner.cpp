// SPDX-License-Identifier: Apache-2.0

#include "objmap/pipeline/runner.hpp"

#include <fstream>

#include "objmap/core/errors.hpp"
#include "objmap/volume/marching_cubes.hpp"

namespace objmap {

namespace {

bool uses_shape_model(Method method) {
  return method == Method::kFull || method == Method::kPriorOnly;
}

void write_mesh_bundle(const std::filesystem::path& dir, const ObjectState& state,
                       const LatentShapeModel* prior, const PosteriorShapeModel* posterior,
                       int resolution) {
  save_ply(dir / "mesh_tsdf.ply", state.volume.extract_surface());
  if (!prior || !posterior) return;

  const Eigen::VectorXd z0 = state.z0;
  const ScalarField prior_field = [prior, z0](const Eigen::Vector3d& p) {
    return prior->sdf(p, z0);
  };
  save_ply(dir / "mesh_prior.ply",
           extract_mesh(sample_field(prior_field, resolution, -1.f, 1.f), 0.f, &prior_field));

  const Eigen::VectorXd z1 = state.z1;
  const TsdfVolume* volume = &state.volume;
  const ScalarField completed = [volume, prior, posterior, z0, z1](const Eigen::Vector3d& p) {
    return posterior->completed_sdf(*volume, *prior, p, z0, z1);
  };
  save_ply(dir / "mesh_completed.ply",
           extract_mesh(sample_field(completed, resolution, -1.f, 1.f), 0.f, &completed));
}

}  // namespace

ShapeModelBundle build_shape_models(const std::string& category, int count, int latent_dim,
                                    std::uint64_t seed) {
  ShapeModelBundle bundle;
  bundle.prior =
      LatentShapeModel::build(prior_training_fields(category, count, seed), latent_dim);
  return bundle;
}

RunSummary run_scene(const RunOptions& options) {
  if (uses_shape_model(options.pipeline.method)) {
    const Scene scene = Scene::load(options.scene_dir);
    const std::string category =
        options.category.empty() ? scene.spec().objects.front().category : options.category;
    const ShapeModelBundle models =
        build_shape_models(category, options.prior_count, options.prior_dim, options.prior_seed);
    return run_scene(options, &models);
  }
  return run_scene(options, nullptr);
}

RunSummary run_scene(const RunOptions& options, const ShapeModelBundle* models) {
  namespace fs = std::filesystem;
  if (options.subsample < 1) throw ValidationError("subsample interval must be >= 1");
  if (uses_shape_model(options.pipeline.method) && models == nullptr)
    throw ValidationError("method requires shape models");

  const Scene scene = Scene::load(options.scene_dir).subsample(options.subsample);
  int frames = scene.frame_count();
  if (options.max_frames > 0) frames = std::min(frames, options.max_frames);
  if (frames < 1) throw ValidationError("no frames selected");

  fs::create_directories(options.out_dir);
  std::ofstream report(options.out_dir / "report.txt", std::ios::binary);
  if (!report) throw ValidationError("cannot write " + (options.out_dir / "report.txt").string());
  {
    std::ofstream cfg(options.out_dir / "run.toml", std::ios::binary);
    cfg << "[run]\n";
    cfg << "scene = \"" << options.scene_dir.string() << "\"\n";
    cfg << "method = \"" << method_name(options.pipeline.method) << "\"\n";
    cfg << "camera = \"" << (options.pipeline.camera_mode == CameraMode::kGt ? "gt" : "icp")
        << "\"\n";
    cfg << "seed = " << options.pipeline.seed << "\n";
    cfg << "subsample = " << options.subsample << "\n";
    cfg << "frames = " << frames << "\n";
  }

  const LatentShapeModel* prior = models ? &models->prior : nullptr;
  const PosteriorShapeModel* posterior = models ? &models->posterior : nullptr;

  WorldMap map;
  Frame prev;
  bool have_prev = false;
  for (int i = 0; i < frames; ++i) {
    const Frame frame = scene.frame(i);
    std::map<int, ObjectPose> gt_objects;
    for (const auto& [id, traj] : scene.gt().objects)
      gt_objects[id] = scene.gt_object(id, i).pose;
    const ProcessReport out = process_frame(map, frame, prior, posterior, gt_objects,
                                            options.pipeline, have_prev ? &prev : nullptr);
    report << out.log;
    prev = frame;
    prev.camera_pose = out.camera_pose;
    have_prev = true;
  }
  report.close();

  save_trajectory(options.out_dir / "trajectory_cam.txt", map.camera);
  RunSummary summary;
  summary.frames = frames;
  summary.out_dir = options.out_dir;
  for (const auto& [id, state] : map.objects) {
    summary.object_ids.push_back(id);
    const fs::path dir = options.out_dir / ("obj_" + std::to_string(id));
    fs::create_directories(dir);
    save_trajectory(dir / "trajectory.txt", state.track);
    if (options.write_meshes)
      write_mesh_bundle(dir, state, prior, posterior, options.mesh_resolution);
  }
  return summary;
}

}  // namespace objmap
