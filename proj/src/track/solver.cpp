// SPDX-License-Identifier: Apache-2.0

#include "objmap/track/solver.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "objmap/core/errors.hpp"

namespace objmap {

namespace {

struct Linearization {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  double cost = 0.0;
};

double block_cost(const GnProblem& problem, const Eigen::VectorXd& x) {
  double cost = 0.0;
  Eigen::VectorXd r;
  for (const auto& block : problem.blocks) {
    block.eval(x, r, nullptr);
    if (!r.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    cost += block.weight * r.squaredNorm();
  }
  return cost;
}

Linearization linearize(const GnProblem& problem, const Eigen::VectorXd& x) {
  Linearization lin;
  const auto dim = x.size();
  lin.h = Eigen::MatrixXd::Zero(dim, dim);
  lin.g = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  for (const auto& block : problem.blocks) {
    block.eval(x, r, &j);
    if (!r.allFinite() || !j.allFinite())
      throw ValidationError("non-finite residual or Jacobian in block '" + block.name + "'");
    if (j.rows() != r.size() || j.cols() != dim)
      throw ValidationError("Jacobian shape mismatch in block '" + block.name + "'");
    lin.h.noalias() += block.weight * j.transpose() * j;
    lin.g.noalias() += block.weight * j.transpose() * r;
    lin.cost += block.weight * r.squaredNorm();
  }
  return lin;
}

}  // namespace

SolveReport gauss_newton_solve(GnProblem& problem, Eigen::VectorXd& x,
                               const OptimizerConfig& config) {
  SolveReport report;
  const auto dim = x.size();
  double nu = config.lm_init;

  Linearization lin = linearize(problem, x);
  report.costs.push_back(lin.cost);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    Eigen::MatrixXd damped = lin.h;
    damped.diagonal().array() += nu;
    const Eigen::VectorXd delta = Eigen::LDLT<Eigen::MatrixXd>(damped).solve(-lin.g);

    if (!delta.allFinite()) {
      nu = nu == 0.0 ? 1e-4 : nu * 10.0;
      if (nu > 1e8) throw NoProgressError("damping overflow with non-finite step");
      continue;
    }
    if (delta.norm() < config.step_tol) {
      report.converged = true;
      report.stop_reason = "step below tolerance";
      break;
    }

    ++report.iterations;
    const Eigen::VectorXd candidate = x + delta;
    const double cost = block_cost(problem, candidate);
    if (std::isfinite(cost) && cost < lin.cost) {
      x = problem.rebase ? problem.rebase(candidate) : candidate;
      lin = linearize(problem, x);
      report.costs.push_back(cost);
      ++report.accepted;
      nu *= 0.5;
    } else {
      nu = nu == 0.0 ? 1e-4 : nu * 10.0;
      if (nu > 1e8) {
        if (report.accepted > 0 || lin.g.norm() < 1e-9) {
          report.converged = true;
          report.stop_reason = "damping saturated after progress";
          break;
        }
        throw NoProgressError("Levenberg-Marquardt damping overflow without progress");
      }
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "max iterations";
  if (dim == 0) report.converged = true;
  return report;
}

}  // namespace objmap
