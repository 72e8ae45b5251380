// SPDX-License-Identifier: Apache-2.0

#include "objmap/track/stages.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "objmap/core/errors.hpp"
#include "objmap/core/rng.hpp"
#include "objmap/geometry/aabb.hpp"
#include "objmap/render/render.hpp"
#include "objmap/track/residuals.hpp"

namespace objmap {
namespace {

constexpr std::uint64_t kCoarseTag = 0x636f6172u;  // "coar"
constexpr std::uint64_t kRefineTag = 0x64656e73u;  // "dens"

struct MaskedPixel {
  int u = 0, v = 0;
  double depth = 0.0;
  Eigen::Vector3d world = Eigen::Vector3d::Zero();
};

std::vector<MaskedPixel> collect_masked(const Frame& frame, std::uint8_t object_id) {
  std::vector<MaskedPixel> out;
  for (int v = 0; v < frame.depth.height(); ++v) {
    for (int u = 0; u < frame.depth.width(); ++u) {
      if (frame.mask.at(u, v) != object_id) continue;
      const double d = frame.depth.at(u, v);
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      MaskedPixel px;
      px.u = u;
      px.v = v;
      px.depth = d;
      px.world = frame.camera_pose.apply(frame.intrinsics.backproject(u, v, d));
      out.push_back(px);
    }
  }
  return out;
}

template <typename T>
std::vector<T> stride_subsample(const std::vector<T>& v, int max_count) {
  const int n = static_cast<int>(v.size());
  if (n <= max_count) return v;
  const int stride = 1 + (n - 1) / max_count;
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>((n + stride - 1) / stride));
  for (int i = 0; i < n; i += stride) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

// Canonical-box entry/exit of the ray through pixel (u, v), measured in world
// ray-length units. Returns false when the ray misses the box.
bool pixel_box_span(const Frame& frame, const ObjectPose& pose, int u, int v,
                    Eigen::Vector3d& dir_world, double& ray_scale, double& t0, double& t1) {
  const Eigen::Vector3d ray_cam = frame.intrinsics.ray(u, v);
  ray_scale = ray_cam.norm();
  dir_world = frame.camera_pose.R * (ray_cam / ray_scale);
  const Eigen::Vector3d origin_c = pose.to_canonical(frame.camera_pose.t);
  const Eigen::Vector3d dir_c = pose.g.R.transpose() * dir_world / pose.scale;
  if (!ray_aabb_intersect(origin_c, dir_c, Aabb::cube(1.0), t0, t1)) return false;
  t0 = std::max(t0, 1e-6);
  return t1 > t0;
}

std::vector<RenderRay> build_rays(const Frame& frame, const ObjectPose& pose,
                                  const OptimizerConfig& config, Rng& rng) {
  std::vector<RenderRay> rays;
  const Bbox2i bbox = project_bbox(pose, frame.camera_pose, frame.intrinsics);
  const auto pixels = sample_rays_in_bbox(bbox, config.render_rays, rng);
  const double sigma_metric = config.sigma * pose.scale;
  for (const auto& px : pixels) {
    const double d = frame.depth.at(px.x(), px.y());
    if (!(d > 0.0) || !std::isfinite(d)) continue;
    Eigen::Vector3d dir;
    double ray_scale = 1.0, t0 = 0.0, t1 = 0.0;
    if (!pixel_box_span(frame, pose, px.x(), px.y(), dir, ray_scale, t0, t1)) continue;
    const double t_meas = d * ray_scale;
    const double t_stop = std::min(t_meas + 4.0 * sigma_metric, t1);
    if (!(t_stop > t0)) continue;  // surface occludes the whole box span
    RenderRay ray;
    ray.origin = frame.camera_pose.t;
    ray.direction = dir;
    ray.measured_depth = t_meas;
    ray.far_depth = t1;
    ray.sample_depths.resize(static_cast<std::size_t>(config.render_samples));
    const double step = (t_stop - t0) / config.render_samples;
    for (int j = 0; j < config.render_samples; ++j)
      ray.sample_depths[static_cast<std::size_t>(j)] = t0 + (j + 0.5) * step;
    rays.push_back(std::move(ray));
  }
  return rays;
}

void merge_report(SolveReport& into, const SolveReport& round) {
  into.costs.insert(into.costs.end(), round.costs.begin(), round.costs.end());
  into.iterations += round.iterations;
  into.accepted += round.accepted;
  into.converged = round.converged;
  into.stop_reason = round.stop_reason;
}

}  // namespace

StageResult coarse_estimate(const Frame& frame, std::uint8_t object_id,
                            const LatentShapeModel& prior, ObjectPose& pose, Eigen::VectorXd& z0,
                            bool optimize_scale, const OptimizerConfig& config,
                            std::uint64_t seed) {
  const std::vector<MaskedPixel> pixels = collect_masked(frame, object_id);
  if (static_cast<int>(pixels.size()) < 10)
    throw InsufficientDataError("coarse estimate: " + std::to_string(pixels.size()) +
                                " masked depth pixels, need 10");

  auto state = std::make_shared<PoseCodeState>();
  state->base = pose;
  state->layout.with_scale = optimize_scale;
  state->layout.code_dim = prior.latent_dim();
  state->code_scale = prior.sigma();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(state->layout.dim());
  for (int k = 0; k < prior.latent_dim(); ++k)
    if (state->code_scale(k) > 0.0) x(state->layout.code_offset() + k) = z0(k) / state->code_scale(k);

  StageResult out;
  std::vector<Eigen::Vector3d> sdf_points;
  for (int round = 0; round < config.rebuild_rounds; ++round) {
    sdf_points.clear();
    for (const auto& px : stride_subsample(pixels, config.sdf_max_points))
      sdf_points.push_back(px.world);
    Rng rng = make_rng(substream(seed, kCoarseTag, static_cast<std::uint64_t>(frame.index),
                                 object_id, static_cast<std::uint64_t>(round)));
    std::vector<RenderRay> rays = build_rays(frame, state->base, config, rng);
    out.sdf_points = static_cast<int>(sdf_points.size());
    out.rays = static_cast<int>(rays.size());

    GnProblem problem;
    problem.blocks.push_back(
        make_sdf_block(state, prior, sdf_points, x, config.sigma, config.lambda_sdf));
    if (!rays.empty())
      problem.blocks.push_back(make_render_block_prior(state, prior, std::move(rays), x,
                                                       config.sigma, config.lambda_render_coarse));
    problem.blocks.push_back(make_code_reg_block(state->layout, config.lambda_z0));
    problem.rebase = make_rebase(state);

    merge_report(out.report, gauss_newton_solve(problem, x, config));
    ++out.rounds;
  }

  pose = state->base;
  z0 = state->model_code_at(x);
  double acc = 0.0;
  for (const auto& p : sdf_points) acc += std::abs(prior.sdf(pose.to_canonical(p), z0));
  out.mean_abs_sdf = sdf_points.empty() ? 0.0 : acc / static_cast<double>(sdf_points.size());
  return out;
}

StageResult dense_refine(const Frame& frame, std::uint8_t object_id, const TsdfVolume& volume,
                         const LatentShapeModel& prior, const PosteriorShapeModel& posterior,
                         ObjectPose& pose, const Eigen::VectorXd& z0, Eigen::VectorXd& z1,
                         const OptimizerConfig& config, std::uint64_t seed) {
  const std::vector<MaskedPixel> pixels = collect_masked(frame, object_id);
  if (static_cast<int>(pixels.size()) < 10)
    throw InsufficientDataError("dense refine: " + std::to_string(pixels.size()) +
                                " masked depth pixels, need 10");

  auto state = std::make_shared<PoseCodeState>();
  state->base = pose;
  state->layout.with_scale = false;
  state->layout.code_dim = posterior.correction_dim();
  state->code_scale = Eigen::VectorXd::Ones(posterior.correction_dim());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(state->layout.dim());
  x.segment(state->layout.code_offset(), state->layout.code_dim) = z1;

  StageResult out;
  for (int round = 0; round < config.rebuild_rounds; ++round) {
    Rng rng = make_rng(substream(seed, kRefineTag, static_cast<std::uint64_t>(frame.index),
                                 object_id, static_cast<std::uint64_t>(round)));
    const std::vector<MaskedPixel> occupied = stride_subsample(pixels, config.occ_max_points);
    const double margin = 2.0 * config.sigma * state->base.scale;

    // Background pixels inside the projected box, for empty-space evidence.
    std::vector<Eigen::Vector2i> background;
    {
      const Bbox2i bbox = project_bbox(state->base, frame.camera_pose, frame.intrinsics);
      for (int v = bbox.v0; v < bbox.v1; ++v)
        for (int u = bbox.u0; u < bbox.u1; ++u)
          if (frame.mask.at(u, v) != object_id) background.emplace_back(u, v);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<OccSample> samples;
    samples.reserve(occupied.size() * 2);
    for (std::size_t i = 0; i < occupied.size(); ++i) {
      OccSample occ;
      occ.point_world = occupied[i].world;
      occ.target = 0.5;
      samples.push_back(occ);

      // One matching empty sample: alternately along the same ray strictly
      // before the surface, and along a background ray through the box.
      bool placed = false;
      for (int attempt = 0; attempt < 4 && !placed; ++attempt) {
        const bool use_background = ((i + attempt) % 2 == 1) && !background.empty();
        int u = occupied[i].u, v = occupied[i].v;
        if (use_background) {
          std::uniform_int_distribution<std::size_t> pick(0, background.size() - 1);
          const Eigen::Vector2i& bg = background[pick(rng)];
          u = bg.x();
          v = bg.y();
        }
        Eigen::Vector3d dir;
        double ray_scale = 1.0, t0 = 0.0, t1 = 0.0;
        if (!pixel_box_span(frame, state->base, u, v, dir, ray_scale, t0, t1)) continue;
        double t_stop = t1;
        const double d = frame.depth.at(u, v);
        if (d > 0.0 && std::isfinite(d)) t_stop = std::min(t_stop, d * ray_scale - margin);
        if (!(t_stop > t0)) continue;
        OccSample empty;
        empty.point_world = frame.camera_pose.t + (t0 + unit(rng) * (t_stop - t0)) * dir;
        empty.target = 0.0;
        samples.push_back(empty);
        placed = true;
      }
    }

    std::vector<RenderRay> rays = build_rays(frame, state->base, config, rng);

    GnProblem problem;
    problem.blocks.push_back(
        make_occ_block(state, volume, prior, posterior, z0, std::move(samples), x,
                       config.lambda_occ));
    if (!rays.empty())
      problem.blocks.push_back(make_render_block_posterior(state, volume, prior, posterior, z0,
                                                           std::move(rays), x, config.sigma,
                                                           config.lambda_render_refine));
    problem.blocks.push_back(make_code_reg_block(state->layout, config.lambda_z1));
    problem.rebase = make_rebase(state);

    merge_report(out.report, gauss_newton_solve(problem, x, config));
    ++out.rounds;
  }

  pose = state->base;
  z1 = x.segment(state->layout.code_offset(), state->layout.code_dim);
  double acc = 0.0;
  int n = 0;
  for (const auto& px : stride_subsample(pixels, config.occ_max_points)) {
    acc += std::abs(prior.sdf(pose.to_canonical(px.world), z0));
    ++n;
  }
  out.mean_abs_sdf = n > 0 ? acc / n : 0.0;
  return out;
}

StageResult prior_only_track(const Frame& frame, std::uint8_t object_id,
                             const LatentShapeModel& prior, ObjectPose& pose,
                             Eigen::VectorXd& z0, bool optimize_scale,
                             const OptimizerConfig& config, std::uint64_t seed) {
  return coarse_estimate(frame, object_id, prior, pose, z0, optimize_scale, config, seed);
}

}  // namespace objmap
