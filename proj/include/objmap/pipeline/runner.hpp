// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "objmap/pipeline/process.hpp"
#include "objmap/synth/scene.hpp"

namespace objmap {

struct RunOptions {
  std::filesystem::path scene_dir;
  std::filesystem::path out_dir;
  PipelineConfig pipeline;
  int subsample = 1;    // keyframe gap: keep every k-th frame
  int max_frames = 0;   // 0 = all
  std::string category;  // prior training category; default: first scene object
  int prior_count = 40;
  int prior_dim = 16;
  std::uint64_t prior_seed = 424242;  // training pool, disjoint from scene shapes
  int mesh_resolution = 64;
  bool write_meshes = true;
};

struct RunSummary {
  int frames = 0;
  std::vector<int> object_ids;
  std::filesystem::path out_dir;
};

// Drives the pipeline over a generated scene directory and writes the run
// bundle: report.txt (per-frame stream), trajectory_cam.txt, and per object
// obj_<id>/trajectory.txt plus meshes. Mesh kinds depend on the method:
// mesh_tsdf.ply always, mesh_prior.ply and mesh_completed.ply when the shape
// model is in play. Outputs are byte-deterministic for a fixed config.
RunSummary run_scene(const RunOptions& options);

// The shape model pair the runner trains, exposed for tests and sweeps that
// want to reuse one across runs.
struct ShapeModelBundle {
  LatentShapeModel prior;
  PosteriorShapeModel posterior;
};
ShapeModelBundle build_shape_models(const std::string& category, int count, int latent_dim,
                                    std::uint64_t seed);

// run_scene with externally supplied models (skips training).
RunSummary run_scene(const RunOptions& options, const ShapeModelBundle* models);

}  // namespace objmap
