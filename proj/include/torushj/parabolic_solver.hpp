#pragma once

// Evolution u_t - trace(A D^2 u) + H(x, Du) = 0 by IMEX Euler: implicit
// linear diffusion, explicit Lax-Friedrichs Hamiltonian.

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "torushj/problem.hpp"
#include "torushj/scheme.hpp"
#include "torushj/torus_grid.hpp"

namespace torushj {

struct TimeStepConfig {
  /// Step size; 0 picks cfl_safety / sum_k(theta_k / h_k).
  double dt = 0.0;
  double cfl_safety = 0.9;
  /// Absolute tolerance of the sandwich and increment checks, scaled by
  /// (1 + |u0|_inf).
  double implicit_tol = 1e-9;
  /// The time-Lipschitz checks need u0 twice differenceable; rough data
  /// should set this to false, which skips and flags them.
  bool assume_smooth_initial = true;
};

/// sup_x |H(x, Du0) - trace(A D^2 u0)| with centred gradients and the
/// monotone diffusion stencil.
double lambda_bound(const HamiltonianSpec& h, const DiffusionSpec& a, const ScalarField& u0);

/// The same quantity for the discrete operator, sup |H_LF(u0) - D u0|. The
/// discrete evolution obeys |u(t) - u0| <= t times this value exactly; it
/// differs from lambda_bound by the O(h) Lax-Friedrichs viscosity.
double scheme_lambda(const DiscreteOperator& op, const ScalarField& u0);

class ImexStepper {
 public:
  explicit ImexStepper(DiscreteOperator op);

  const DiscreteOperator& op() const { return op_; }
  /// Largest dt allowed by the explicit part, 1 / sum_k(theta_k / h_k).
  double cfl_limit() const;
  /// Solves (I - dt D) u' = u - dt H_LF(u). Throws LinearSolveFailure.
  Eigen::VectorXd step(const Eigen::VectorXd& u, double dt);

 private:
  using Factor = Eigen::SparseLU<Eigen::SparseMatrix<double>>;
  DiscreteOperator op_;
  Eigen::SparseMatrix<double> diffusion_;
  std::map<double, std::unique_ptr<Factor>> factors_;
};

/// One IMEX step with dt = tcfg.dt (which must be positive here).
ScalarField step_imex(const ScalarField& u, const HamiltonianSpec& h, const DiffusionSpec& a,
                      const TimeStepConfig& tcfg, const SchemeConfig& scfg);

struct Evolution {
  TorusGrid grid;
  double dt = 0.0;
  std::vector<double> snapshot_times;
  std::vector<ScalarField> snapshots;
  ScalarField u0;
  double lambda_bound = 0.0;   ///< continuum-style bound from u0
  double lambda_scheme = 0.0;  ///< discrete bound the scheme obeys exactly
  double tol = 0.0;
  int steps = 0;
  /// max over steps of |u_{n+1} - u_n|_inf / dt_n
  double max_increment_rate = 0.0;
  /// max over steps of |u_{n+1} - u_n|_inf - (Lambda dt_n + slack + 2 tol)
  double worst_increment_excess = 0.0;
  /// max over snapshots of the two-sided sandwich defect (<= 0 when it holds)
  double worst_sandwich_excess = 0.0;
  bool lambda_checked = true;
  bool lambda_violated = false;
  std::vector<double> snapshot_lipschitz;

  /// Lambda plus the scheme slack max(0, lambda_scheme - lambda_bound).
  double lambda_effective() const;
};

/// Called after every step with (t, u(t)).
using StepObserver = std::function<void(double, const Eigen::VectorXd&)>;

/// Geometric schedule {0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1, 2, 5, ...}
/// truncated at T, with T appended.
std::vector<double> default_snapshot_times(double T);

/// Marches to T, hitting every snapshot time exactly (the last step before a
/// snapshot is shortened). snapshot_times must start at 0 and increase.
Evolution evolve(const HamiltonianSpec& h, const DiffusionSpec& a, const ScalarField& u0,
                 double T, const TimeStepConfig& tcfg, const SchemeConfig& scfg,
                 std::vector<double> snapshot_times = {},
                 const StepObserver& observer = {});

struct RegularizedEvolution {
  double q = 0.0;
  double n_trunc = 0.0;
  double M = 0.0;
  double gamma = 0.0;  ///< (M - 2) / (M - 1)
  Evolution evolution;
  /// sup_x |u_qn - u| per snapshot, against the unregularized reference.
  std::vector<double> sup_gap;
  std::vector<double> holder;  ///< Hoelder-gamma seminorm per snapshot
};

/// Evolves with (1/q)|p|^M + H_n(x,p), H_n the truncation at |p| = n_trunc,
/// and compares against `reference` (same u0, snapshots and scheme). The
/// scheme configuration must dominate both Hamiltonians; M must exceed 2.
RegularizedEvolution evolve_regularized(const HamiltonianSpec& h, const DiffusionSpec& a,
                                        const ScalarField& u0, double T, double q,
                                        double n_trunc, double M,
                                        const TimeStepConfig& tcfg,
                                        const SchemeConfig& scfg,
                                        const Evolution& reference);

}  // namespace torushj
