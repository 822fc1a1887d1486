#pragma once

// Independent reference values: the Hopf-Cole eigenvalue route for quadratic
// Hamiltonians, refined-grid re-solves and exhaustive pair scans.

#include <functional>
#include <optional>
#include <vector>

#include "torushj/problem.hpp"
#include "torushj/regularity.hpp"
#include "torushj/stationary_solver.hpp"
#include "torushj/torus_grid.hpp"

namespace torushj {

enum class OracleKind { hopf_cole, fine_grid, closed_form };

struct OracleResult {
  OracleKind kind = OracleKind::closed_form;
  std::optional<double> c;
  std::optional<ScalarField> field;
  double error_estimate = 0.0;
  int iterations = 0;
};

/// Ergodic pair for A = nu I and H = |p|^2 + ell(x): with v = -nu log(phi),
/// c = -lambda_1 of -nu^2 Delta_h - ell, found by shifted inverse power
/// iteration (shift -max(ell) - 1, start vector all ones) to relative 1e-10.
/// The field is anchored to 0 at node 0. Throws NonPositiveEigenvector.
OracleResult hopf_cole_ergodic(const ScalarField& ell, double nu);

/// eps > 0: discounted problem; eps == 0: ergodic problem (direct route).
struct StationaryProblem {
  HamiltonianSpec h;
  DiffusionSpec a;
  TorusGrid grid;
  double eps = 0.0;
};

/// Injection of a field onto a coarser grid whose counts divide its own.
ScalarField restrict_to(const ScalarField& fine, const TorusGrid& coarse);

/// Solution of the problem on its grid (adaptive scheme configuration).
/// For ergodic problems `c` is set as well.
OracleResult solve_reference(const StationaryProblem& problem,
                             const AdaptiveOptions& opts = {});

/// Re-solves on the grid refined by `refine_factor` (2 or 4), restricts to
/// the coarse grid and reports the sup gap to the coarse solution as
/// error_estimate.
OracleResult fine_grid_reference(const StationaryProblem& problem, int refine_factor,
                                 const AdaptiveOptions& opts = {});

/// Observed order from errors e_coarse, e_fine at refinement ratio `ratio`.
double observed_order(double e_coarse, double e_fine, double ratio = 2.0);

/// Order from three successive refinements by 2 without a known limit:
/// log2(|a - b| / |b - c|).
double three_level_order(double a, double b, double c);

struct PairMax {
  double M = 0.0;
  NodePair argmax;
};

/// Exhaustive max over ordered pairs x != y of v(x) - v(y) - penalty(d(x,y)),
/// enumerated in reverse order. Throws TooManyPairs above 1e8 unordered pairs.
PairMax brute_pair_max(const ScalarField& field, const std::function<double(double)>& penalty);

}  // namespace torushj
