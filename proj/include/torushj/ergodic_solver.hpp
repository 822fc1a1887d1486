#pragma once

// Ergodic (cell) problem -trace(A D^2 v0) + H(x, Dv0) = c, solved by the
// vanishing-discount limit and directly on the augmented unknown (v0, c).

#include <optional>
#include <string>
#include <vector>

#include "torushj/problem.hpp"
#include "torushj/scheme.hpp"
#include "torushj/stationary_solver.hpp"
#include "torushj/torus_grid.hpp"

namespace torushj {

enum class ErgodicRoute { vanishing_discount, direct };

std::string to_string(ErgodicRoute r);

struct ConvergenceRow {
  double eps = 0.0;            ///< discount (or Newton iteration index, direct route)
  double c_estimate = 0.0;     ///< -eps v(anchor), or current c
  double sup_increment = 0.0;  ///< sup |(v - v(anchor)) - previous|
};

struct ErgodicSolution {
  double c = 0.0;
  ScalarField v0;  ///< v0 at node 0 is exactly 0
  ErgodicRoute route = ErgodicRoute::direct;
  std::vector<ConvergenceRow> convergence_table;
  double residual_sup = 0.0;
  SchemeConfig scheme;
};

std::vector<double> default_eps_schedule();

/// Sup norm of the discrete -trace(A D^2 v) + H_LF(v) - c.
double ergodic_residual(const DiscreteOperator& op, const ScalarField& v, double c);

/// Solves the discounted problem along the strictly decreasing schedule,
/// warm-starting each solve from the previous one, and extrapolates
/// c = -eps v(0) linearly in eps over the last two points. Throws NonCauchy
/// when the increments of v - v(0) stop contracting.
ErgodicSolution solve_vanishing_discount(const HamiltonianSpec& h, const DiffusionSpec& a,
                                         const TorusGrid& grid,
                                         const std::vector<double>& eps_schedule,
                                         const SchemeConfig& cfg);

/// Newton on (v_1..v_{N-1}, c) with v_0 = 0. If Newton stalls from the
/// default start it restarts from a small-discount solution.
ErgodicSolution solve_direct(const HamiltonianSpec& h, const DiffusionSpec& a,
                             const TorusGrid& grid, const SchemeConfig& cfg,
                             const std::optional<ScalarField>& init = std::nullopt);

/// Scheme configuration sized like solve_discounted_adaptive, from a
/// small-discount solve (eps = 1e-3).
SchemeConfig ergodic_scheme_config(const HamiltonianSpec& h, const DiffusionSpec& a,
                                   const TorusGrid& grid, const AdaptiveOptions& opts = {});

}  // namespace torushj
