#pragma once

// Restarted GMRES for the inexact Newton steps.

#include <functional>

#include <Eigen/Core>

namespace torushj {

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct GmresResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 1.0;
  bool converged = false;
};

/// Solves a(x) = b with right preconditioning: GMRES runs on a(m(y)) = b and
/// returns x = m(y). Convergence is |b - a(x)| <= rtol |b| measured by the
/// Arnoldi recurrence. An empty `m` means no preconditioner.
GmresResult gmres(const LinearOperator& a, const Eigen::VectorXd& b,
                  const LinearOperator& m = {}, int restart = 30, double rtol = 1e-2,
                  int max_iterations = 300);

}  // namespace torushj
