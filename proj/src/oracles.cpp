#include "torushj/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "torushj/ergodic_solver.hpp"
#include "torushj/errors.hpp"

namespace torushj {

OracleResult hopf_cole_ergodic(const ScalarField& ell, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("hopf_cole_ergodic: nu must be positive");
  const TorusGrid& g = ell.grid();
  const Eigen::Index n = static_cast<Eigen::Index>(g.size());
  const double shift = -ell.max() - 1.0;

  // B - shift I with B = -nu^2 Delta_h - ell; Delta_h is the standard
  // (2d+1)-point periodic Laplacian.
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<Eigen::Triplet<double>> trip_b;
  for (Eigen::Index i = 0; i < n; ++i) {
    double diag = -ell[static_cast<std::size_t>(i)];
    for (int k = 0; k < g.dim(); ++k) {
      const double w = nu * nu / (g.spacing(k) * g.spacing(k));
      diag += 2.0 * w;
      for (int s : {-1, 1}) {
        const auto j = static_cast<Eigen::Index>(g.shift(static_cast<std::size_t>(i), k, s));
        trip_b.emplace_back(i, j, -w);
      }
    }
    trip_b.emplace_back(i, i, diag);
  }
  Eigen::SparseMatrix<double> b(n, n);
  b.setFromTriplets(trip_b.begin(), trip_b.end());
  Eigen::SparseMatrix<double> id(n, n);
  id.setIdentity();
  const Eigen::SparseMatrix<double> shifted = b - shift * id;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) {
    throw LinearSolveFailure("hopf_cole_ergodic: factorisation failed");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  x.normalize();
  double lambda = x.dot(b * x);
  OracleResult out;
  out.kind = OracleKind::hopf_cole;
  for (int it = 1; it <= 1000; ++it) {
    Eigen::VectorXd y = ldlt.solve(x);
    y.normalize();
    const double next = y.dot(b * y);
    const double change = std::abs(next - lambda);
    const double vec_change = (y - x).lpNorm<Eigen::Infinity>();
    x = std::move(y);
    lambda = next;
    out.iterations = it;
    if (change <= 1e-10 * std::max(std::abs(lambda), 1e-10) && vec_change <= 1e-12) break;
  }
  out.error_estimate = (b * x - lambda * x).norm();

  if (x.sum() < 0.0) x = -x;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x[i] > 0.0)) {
      std::ostringstream msg;
      msg << "principal eigenvector is not positive at node " << i << " (" << x[i] << ")";
      throw NonPositiveEigenvector(msg.str());
    }
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = -nu * std::log(x[i] / x[0]);
  v[0] = 0.0;
  out.c = -lambda;
  out.field = ScalarField(g, v);
  return out;
}

ScalarField restrict_to(const ScalarField& fine, const TorusGrid& coarse) {
  const TorusGrid& g = fine.grid();
  if (g.dim() != coarse.dim()) throw std::invalid_argument("restrict_to: dimension mismatch");
  std::array<int, 2> factor{1, 1};
  for (int k = 0; k < g.dim(); ++k) {
    if (g.count(k) % coarse.count(k) != 0) {
      throw std::invalid_argument("restrict_to: grids are not nested");
    }
    factor[k] = g.count(k) / coarse.count(k);
  }
  std::vector<double> values(coarse.size());
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const MultiIndex c = coarse.multi(i);
    values[i] = fine.at({c[0] * factor[0], c[1] * factor[1]});
  }
  return ScalarField(coarse, std::move(values));
}

OracleResult solve_reference(const StationaryProblem& problem, const AdaptiveOptions& opts) {
  OracleResult out;
  out.kind = OracleKind::fine_grid;
  if (problem.eps > 0.0) {
    out.field = solve_discounted_adaptive(problem.h, problem.a, problem.grid, problem.eps, opts)
                    .solution;
  } else {
    const SchemeConfig cfg = ergodic_scheme_config(problem.h, problem.a, problem.grid, opts);
    const ErgodicSolution sol = solve_direct(problem.h, problem.a, problem.grid, cfg);
    out.c = sol.c;
    out.field = sol.v0;
  }
  return out;
}

OracleResult fine_grid_reference(const StationaryProblem& problem, int refine_factor,
                                 const AdaptiveOptions& opts) {
  if (refine_factor != 2 && refine_factor != 4) {
    throw std::invalid_argument("fine_grid_reference: refine factor must be 2 or 4");
  }
  StationaryProblem fine = problem;
  fine.grid = problem.grid.refined(refine_factor);
  const OracleResult coarse = solve_reference(problem, opts);
  OracleResult out = solve_reference(fine, opts);
  out.field = restrict_to(*out.field, problem.grid);
  out.error_estimate =
      (out.field->to_vector() - coarse.field->to_vector()).lpNorm<Eigen::Infinity>();
  return out;
}

double observed_order(double e_coarse, double e_fine, double ratio) {
  return std::log(e_coarse / e_fine) / std::log(ratio);
}

double three_level_order(double a, double b, double c) {
  return std::log2(std::abs(a - b) / std::abs(b - c));
}

PairMax brute_pair_max(const ScalarField& field,
                       const std::function<double(double)>& penalty) {
  const TorusGrid& g = field.grid();
  const std::size_t n = g.size();
  if (n * (n - 1) / 2 > 100'000'000ULL) {
    throw TooManyPairs("brute_pair_max: more than 1e8 pairs");
  }
  PairMax out;
  out.M = -std::numeric_limits<double>::infinity();
  for (std::size_t jj = n; jj-- > 0;) {
    const MultiIndex mj = g.multi(jj);
    for (std::size_t ii = n; ii-- > 0;) {
      if (ii == jj) continue;
      const double d = periodic_distance(g, g.multi(ii), mj);
      const double value = field[ii] - field[jj] - penalty(d);
      if (value > out.M) {
        out.M = value;
        out.argmax = {ii, jj};
      }
    }
  }
  return out;
}

}  // namespace torushj
