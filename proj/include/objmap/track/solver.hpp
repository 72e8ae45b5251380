// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace objmap {

struct OptimizerConfig {
  double lambda_sdf = 100.0;
  double lambda_render_coarse = 2.5;
  double lambda_z0 = 5.0;
  double lambda_occ = 100.0;
  double lambda_render_refine = 1.0;
  double lambda_z1 = 1.0;
  double sigma = 0.05;
  int max_iters = 10;
  double step_tol = 1e-6;
  double lm_init = 0.0;
  int sdf_max_points = 2048;
  int render_rays = 128;
  int render_samples = 32;
  int occ_max_points = 512;  // occupied samples; empty samples match 1:1
  int rebuild_rounds = 2;    // sample-and-solve rounds per stage
};

// One weighted least-squares term: fills r and, when J is non-null, the
// Jacobian with respect to the full parameter vector. Evaluation must be a
// pure function of x. Jacobians are only requested at rebased states (zero
// pose increment), so blocks may linearize pose updates at the identity.
struct ResidualBlock {
  std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J)> eval;
  double weight = 1.0;
  std::string name;
};

struct SolveReport {
  std::vector<double> costs;  // cost after the initial eval and each accepted step
  int iterations = 0;
  int accepted = 0;
  bool converged = false;
  std::string stop_reason;
  double final_cost() const { return costs.empty() ? 0.0 : costs.back(); }
  double initial_cost() const { return costs.empty() ? 0.0 : costs.front(); }
};

struct GnProblem {
  std::vector<ResidualBlock> blocks;
  // Folds an accepted increment into externally held state (for example a
  // pose) and returns the parameter vector to continue from, typically with
  // the pose part reset to zero. Identity when null.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> rebase;
};

// Gauss-Newton with Levenberg-Marquardt damping:
//   delta = -(sum w J^T J + nu I)^(-1) sum w J^T r
// nu halves on accepted steps, grows tenfold on rejections (from 1e-4 when it
// was zero), and nu > 1e8 without progress raises NoProgressError. Stops on
// max_iters or ||delta|| < step_tol.
SolveReport gauss_newton_solve(GnProblem& problem, Eigen::VectorXd& x,
                               const OptimizerConfig& config);

}  // namespace objmap
