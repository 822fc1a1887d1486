#pragma once

// Discounted stationary problem eps v - trace(A D^2 v) + H(x, Dv) = 0 and its
// vanishing-viscosity variant for degenerate A.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "torushj/problem.hpp"
#include "torushj/scheme.hpp"
#include "torushj/torus_grid.hpp"

namespace torushj {

enum class SolveMethod { newton, pseudo_time, hybrid };

std::string to_string(SolveMethod m);

/// A nonlinear system together with what the damped Newton driver needs.
struct NewtonSystem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
  /// Approximate Jacobian used as GMRES preconditioner.
  std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)> jacobian;
  /// (x, dir) -> J(x) dir
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      jacobian_apply;
  /// (x, F(x), fraction) -> next iterate of a monotone explicit relaxation
  /// taking `fraction` of its full step. Optional.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&, double)>
      pseudo_time_update;
  /// Called after every accepted iterate with (x, |F(x)|_inf). Optional.
  std::function<void(const Eigen::VectorXd&, double)> on_step;
};

struct NewtonOutcome {
  Eigen::VectorXd x;
  double residual_sup = 0.0;
  int iterations = 0;
  SolveMethod method = SolveMethod::newton;
  bool converged = false;
};

/// Inexact Newton (GMRES(30), relative tolerance 1e-2, preconditioned by a
/// sparse LU of `jacobian`) with a sup-norm backtracking line search using
/// the factor `damping`. Three consecutive steps without decrease switch to
/// the pseudo-time relaxation until the residual drops tenfold.
NewtonOutcome newton_solve(const NewtonSystem& system, Eigen::VectorXd x0, double tol,
                           int max_newton, double damping);

struct StationaryReport {
  ScalarField solution;
  double eps = 0.0;
  double residual_sup = 0.0;
  int iterations = 0;
  SolveMethod method = SolveMethod::newton;
  double linf = 0.0;      ///< |v|_inf
  double eps_linf = 0.0;  ///< eps |v|_inf
  SchemeConfig scheme;    ///< configuration the solution was computed with
};

/// Solves on `grid` with a fixed scheme configuration. Without `init` the
/// iteration starts from the constant -mean_x H(x, 0) / eps. Throws
/// NoConvergence when the residual cannot be brought below tol_residual.
StationaryReport solve_discounted(const HamiltonianSpec& h, const DiffusionSpec& a,
                                  const TorusGrid& grid, double eps,
                                  const SchemeConfig& cfg,
                                  const std::optional<ScalarField>& init = std::nullopt);

struct AdaptiveOptions {
  /// Smallest gradient box per axis.
  double box_floor = 0.1;
  int max_rounds = 6;
  /// Defaults to 1e-8 (1 + |H(., 0)|_inf) when unset.
  std::optional<double> tol_residual;
  int max_newton = 100;
};

/// Sizes the gradient box as 2x the measured one-sided gradients, certifies
/// theta for it and re-solves until the solution stays inside the box.
StationaryReport solve_discounted_adaptive(const HamiltonianSpec& h,
                                           const DiffusionSpec& a, const TorusGrid& grid,
                                           double eps, const AdaptiveOptions& opts = {},
                                           const std::optional<ScalarField>& init =
                                               std::nullopt);

struct DegenerateLadder {
  std::vector<double> q;
  std::vector<StationaryReport> reports;
  double gamma = 0.5;                ///< Hoelder exponent (m - 2) / (m - 1)
  std::vector<double> holder;        ///< Hoelder-gamma seminorm per q
  std::vector<double> cauchy_gaps;   ///< sup |v_{q_{i+1}} - v_{q_i}|
  ScalarField extrapolated;          ///< linear-in-1/q extrapolation to q = inf
  SchemeConfig scheme;               ///< shared across the ladder
};

/// Solves eps v - trace((A + I/q) D^2 v) + |Dv|^(M+1)/q + H(x, Dv) = 0 for each
/// q of the increasing schedule. One viscosity, certified for every rung on
/// the union of their gradient boxes, is shared so that the rungs differ
/// only through q. `m_growth` is the coercivity exponent m of H (gamma =
/// (m-2)/(m-1)).
DegenerateLadder solve_degenerate_via_regularization(const HamiltonianSpec& h,
                                                     const DiffusionSpec& a,
                                                     const TorusGrid& grid, double eps,
                                                     const std::vector<double>& q_schedule,
                                                     double M, double m_growth,
                                                     const AdaptiveOptions& opts = {});

}  // namespace torushj
