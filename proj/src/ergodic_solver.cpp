#include "torushj/ergodic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "torushj/errors.hpp"

namespace torushj {

std::string to_string(ErgodicRoute r) {
  return r == ErgodicRoute::direct ? "direct" : "vanishing_discount";
}

std::vector<double> default_eps_schedule() {
  return {1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001};
}

double ergodic_residual(const DiscreteOperator& op, const ScalarField& v, double c) {
  const Eigen::VectorXd r = op.residual(v.to_vector(), 0.0).array() - c;
  return r.lpNorm<Eigen::Infinity>();
}

namespace {

Eigen::VectorXd anchored(const Eigen::VectorXd& v) {
  return (v.array() - v[0]).matrix();
}

}  // namespace

ErgodicSolution solve_vanishing_discount(const HamiltonianSpec& h, const DiffusionSpec& a,
                                         const TorusGrid& grid,
                                         const std::vector<double>& eps_schedule,
                                         const SchemeConfig& cfg) {
  if (eps_schedule.size() < 2) {
    throw std::invalid_argument("vanishing discount: need at least two discounts");
  }
  for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
    if (!(eps_schedule[k] > 0.0) || (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1]))) {
      throw std::invalid_argument("vanishing discount: schedule must decrease and stay positive");
    }
  }

  ErgodicSolution out{0.0, ScalarField::constant(grid, 0.0), ErgodicRoute::vanishing_discount,
                      {}, 0.0, cfg};
  std::optional<ScalarField> guess;
  Eigen::VectorXd previous;
  std::vector<double> c_values;
  for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
    const double eps = eps_schedule[k];
    const StationaryReport rep = solve_discounted(h, a, grid, eps, cfg, guess);
    const Eigen::VectorXd v = rep.solution.to_vector();
    const Eigen::VectorXd w = anchored(v);
    const double c_eps = -eps * v[0];
    const double inc = previous.size() ? (w - previous).lpNorm<Eigen::Infinity>() : 0.0;
    out.convergence_table.push_back({eps, c_eps, inc});
    c_values.push_back(c_eps);
    previous = w;
    if (k + 1 < eps_schedule.size()) {
      // eps v(0) is nearly constant along the schedule; rescale that part.
      guess = ScalarField(grid, Eigen::VectorXd(
                                    (w.array() + v[0] * eps / eps_schedule[k + 1]).matrix()));
    }
  }

  // Increments must eventually contract: the last one may not exceed the
  // largest earlier one (which is the first real increment in practice).
  const auto& t = out.convergence_table;
  double largest = 0.0;
  for (std::size_t k = 1; k + 1 < t.size(); ++k) largest = std::max(largest, t[k].sup_increment);
  const double last = t.back().sup_increment;
  if (t.size() >= 3 && last > 1e-10 && last >= largest) {
    std::ostringstream msg;
    msg << "vanishing-discount increments do not contract (last " << last << ", max earlier "
        << largest << ")";
    throw NonCauchy(msg.str());
  }

  const std::size_t n = eps_schedule.size();
  const double ea = eps_schedule[n - 2];
  const double eb = eps_schedule[n - 1];
  out.c = (ea * c_values[n - 1] - eb * c_values[n - 2]) / (ea - eb);
  out.v0 = ScalarField(grid, previous);
  const DiscreteOperator op(grid, h, a, cfg);
  out.residual_sup = ergodic_residual(op, out.v0, out.c);
  return out;
}

namespace {

struct DirectAttempt {
  NewtonOutcome outcome;
  std::vector<ConvergenceRow> table;
};

DirectAttempt newton_direct(const DiscreteOperator& op, const Eigen::VectorXd& v_init,
                            double c_init, const SchemeConfig& cfg) {
  const Eigen::Index n = static_cast<Eigen::Index>(op.size());
  auto split = [n](const Eigen::VectorXd& z) {
    Eigen::VectorXd v(n);
    v[0] = 0.0;
    v.tail(n - 1) = z.head(n - 1);
    return v;
  };

  NewtonSystem system;
  system.residual = [&](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(op.residual(split(z), 0.0).array() - z[n - 1]);
  };
  system.jacobian = [&](const Eigen::VectorXd& z) {
    const Eigen::SparseMatrix<double> jf = op.jacobian(split(z), 0.0);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(jf.nonZeros() + n));
    for (Eigen::Index col = 0; col < jf.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(jf, col); it; ++it) {
        // Column 0 (anchored v_0) drops out; v_j moves to column j - 1.
        if (it.col() > 0) trip.emplace_back(it.row(), it.col() - 1, it.value());
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, n - 1, -1.0);
    Eigen::SparseMatrix<double> j(n, n);
    j.setFromTriplets(trip.begin(), trip.end());
    return j;
  };
  system.jacobian_apply = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& d) {
    return Eigen::VectorXd(op.jacobian_apply(split(z), split(d), 0.0).array() - d[n - 1]);
  };

  DirectAttempt attempt;
  Eigen::VectorXd last_v = v_init;
  int iter = 0;
  system.on_step = [&](const Eigen::VectorXd& z, double) {
    const Eigen::VectorXd v = split(z);
    attempt.table.push_back(
        {static_cast<double>(++iter), z[n - 1], (v - last_v).lpNorm<Eigen::Infinity>()});
    last_v = v;
  };

  Eigen::VectorXd z0(n);
  z0.head(n - 1) = anchored(v_init).tail(n - 1);
  z0[n - 1] = c_init;
  attempt.table.push_back({0.0, c_init, 0.0});
  attempt.outcome = newton_solve(system, z0, cfg.tol_residual, cfg.max_newton, cfg.damping);
  attempt.outcome.x = [&] {
    Eigen::VectorXd packed(n + 1);
    packed.head(n) = split(attempt.outcome.x);
    packed[n] = attempt.outcome.x[n - 1];
    return packed;
  }();
  return attempt;
}

}  // namespace

ErgodicSolution solve_direct(const HamiltonianSpec& h, const DiffusionSpec& a,
                             const TorusGrid& grid, const SchemeConfig& cfg,
                             const std::optional<ScalarField>& init) {
  const DiscreteOperator op(grid, h, a, cfg);
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());

  Eigen::VectorXd v_init = init ? anchored(init->to_vector()) : Eigen::VectorXd::Zero(n);
  // The constant shift of the residual is the natural first guess for c.
  const double c_init = op.residual(v_init, 0.0).mean();
  DirectAttempt attempt = newton_direct(op, v_init, c_init, cfg);
  if (!attempt.outcome.converged) {
    // No explicit relaxation exists for (v, c); start again from a
    // small-discount solution instead.
    const double eps = 1e-4;
    const StationaryReport rep = solve_discounted(h, a, grid, eps, cfg);
    const Eigen::VectorXd v = rep.solution.to_vector();
    attempt = newton_direct(op, anchored(v), -eps * v[0], cfg);
  }
  if (!attempt.outcome.converged) {
    std::ostringstream msg;
    msg << "direct ergodic solve stopped at residual " << attempt.outcome.residual_sup
        << " > " << cfg.tol_residual;
    throw NoConvergence(msg.str());
  }
  ErgodicSolution out{attempt.outcome.x[n], ScalarField(grid, Eigen::VectorXd(attempt.outcome.x.head(n))),
                      ErgodicRoute::direct, std::move(attempt.table),
                      attempt.outcome.residual_sup, cfg};
  return out;
}

SchemeConfig ergodic_scheme_config(const HamiltonianSpec& h, const DiffusionSpec& a,
                                   const TorusGrid& grid, const AdaptiveOptions& opts) {
  return solve_discounted_adaptive(h, a, grid, 1e-3, opts).scheme;
}

}  // namespace torushj
