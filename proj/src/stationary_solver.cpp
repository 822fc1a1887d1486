#include "torushj/stationary_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseLU>

#include "torushj/errors.hpp"
#include "torushj/linear.hpp"
#include "torushj/regularity.hpp"

namespace torushj {

std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::newton:
      return "newton";
    case SolveMethod::pseudo_time:
      return "pseudo_time";
    case SolveMethod::hybrid:
      return "hybrid";
  }
  return "unknown";
}

namespace {

double sup(const Eigen::VectorXd& v) { return v.lpNorm<Eigen::Infinity>(); }

// Relaxes until the residual has dropped tenfold (or to tol). A sweep that
// raises the residual is rejected and the step halved; this only happens when
// the iterate sits outside the box the step was certified for. Returns the
// number of sweeps used.
int pseudo_time_phase(const NewtonSystem& system, Eigen::VectorXd& x, Eigen::VectorXd& f,
                      double& r, double tol, int max_sweeps) {
  const double target = std::max(tol, 0.1 * r);
  double fraction = 1.0;
  int sweeps = 0;
  while (r > target && sweeps < max_sweeps) {
    Eigen::VectorXd candidate = system.pseudo_time_update(x, f, fraction);
    Eigen::VectorXd fc = system.residual(candidate);
    const double rc = sup(fc);
    ++sweeps;
    if (!std::isfinite(rc) || rc > r) {
      fraction *= 0.5;
      if (fraction < 1e-12) break;
      continue;
    }
    x = std::move(candidate);
    f = std::move(fc);
    r = rc;
    fraction = std::min(1.0, 2.0 * fraction);
  }
  return sweeps;
}

}  // namespace

NewtonOutcome newton_solve(const NewtonSystem& system, Eigen::VectorXd x0, double tol,
                           int max_newton, double damping) {
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw std::invalid_argument("newton_solve: damping must lie in (0, 1]");
  }
  NewtonOutcome out;
  out.x = std::move(x0);
  Eigen::VectorXd f = system.residual(out.x);
  double r = sup(f);
  bool used_newton = false;
  bool used_pseudo = false;
  int stalled = 0;
  int newton_steps = 0;
  constexpr int kPseudoBudget = 200000;
  int pseudo_left = kPseudoBudget;

  while (r > tol && newton_steps < max_newton) {
    bool decreased = false;
    const Eigen::SparseMatrix<double> jac = system.jacobian(out.x);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(jac);
    lu.factorize(jac);
    LinearOperator precond;
    if (lu.info() == Eigen::Success) {
      precond = [&lu](const Eigen::VectorXd& v) -> Eigen::VectorXd { return lu.solve(v); };
    }
    const Eigen::VectorXd& x_ref = out.x;
    const GmresResult lin = gmres(
        [&](const Eigen::VectorXd& d) { return system.jacobian_apply(x_ref, d); }, -f,
        precond, 30, 1e-2, 300);
    ++newton_steps;
    used_newton = true;
    if (lin.x.allFinite()) {
      double lambda = 1.0;
      for (int trial = 0; trial < 12; ++trial, lambda *= damping) {
        Eigen::VectorXd candidate = out.x + lambda * lin.x;
        Eigen::VectorXd fc = system.residual(candidate);
        const double rc = sup(fc);
        if (std::isfinite(rc) && rc < r) {
          out.x = std::move(candidate);
          f = std::move(fc);
          r = rc;
          decreased = true;
          if (system.on_step) system.on_step(out.x, r);
          break;
        }
      }
    }
    stalled = decreased ? 0 : stalled + 1;
    if (stalled >= 3) {
      if (!system.pseudo_time_update || pseudo_left <= 0) break;
      const double before = r;
      const int used = pseudo_time_phase(system, out.x, f, r, tol, pseudo_left);
      pseudo_left -= used;
      out.iterations += used;
      used_pseudo = true;
      stalled = 0;
      if (system.on_step) system.on_step(out.x, r);
      if (!(r < before)) break;
    }
  }
  out.iterations += newton_steps;
  out.residual_sup = r;
  out.converged = r <= tol;
  out.method = used_pseudo ? (used_newton ? SolveMethod::hybrid : SolveMethod::pseudo_time)
                           : SolveMethod::newton;
  return out;
}

StationaryReport solve_discounted(const HamiltonianSpec& h, const DiffusionSpec& a,
                                  const TorusGrid& grid, double eps,
                                  const SchemeConfig& cfg,
                                  const std::optional<ScalarField>& init) {
  if (!(eps > 0.0)) throw std::invalid_argument("solve_discounted: eps must be positive");
  const DiscreteOperator op(grid, h, a, cfg);

  Eigen::VectorXd x0;
  if (init) {
    if (!(init->grid() == grid)) {
      throw std::invalid_argument("solve_discounted: initial guess on another grid");
    }
    x0 = init->to_vector();
  } else {
    double mean = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) mean += h(grid.point(i), VectorSample::Zero());
    mean /= static_cast<double>(grid.size());
    x0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), -mean / eps);
  }

  const double dtau = op.pseudo_time_step(eps);
  NewtonSystem system;
  system.residual = [&](const Eigen::VectorXd& v) { return op.residual(v, eps); };
  system.jacobian = [&](const Eigen::VectorXd& v) { return op.jacobian(v, eps); };
  system.jacobian_apply = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& d) {
    return op.jacobian_apply(v, d, eps);
  };
  system.pseudo_time_update = [dtau](const Eigen::VectorXd& v, const Eigen::VectorXd& f,
                                     double fraction) {
    return Eigen::VectorXd(v - fraction * dtau * f);
  };

  NewtonOutcome res = newton_solve(system, std::move(x0), cfg.tol_residual, cfg.max_newton,
                                   cfg.damping);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "discounted solve (eps=" << eps << ") stopped at residual " << res.residual_sup
        << " > " << cfg.tol_residual << " after " << res.iterations << " iterations";
    throw NoConvergence(msg.str());
  }
  StationaryReport rep{ScalarField(grid, res.x), eps, res.residual_sup, res.iterations,
                       res.method, 0.0, 0.0, cfg};
  rep.linf = rep.solution.sup_norm();
  rep.eps_linf = eps * rep.linf;
  return rep;
}

namespace {

std::array<double, 2> measured_gradient(const ScalarField& v) {
  const TorusGrid& g = v.grid();
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const OneSidedGradients p = one_sided_gradients(v, g.multi(i));
    for (int k = 0; k < g.dim(); ++k) {
      out[k] = std::max({out[k], std::abs(p.minus[k]), std::abs(p.plus[k])});
    }
  }
  return out;
}

double tolerance_for(const HamiltonianSpec& h, const TorusGrid& grid,
                     const AdaptiveOptions& opts) {
  if (opts.tol_residual) return *opts.tol_residual;
  const std::vector<Point> xs = grid_points(grid);
  return default_tol_residual(sup_abs_H0(h, xs));
}

}  // namespace

StationaryReport solve_discounted_adaptive(const HamiltonianSpec& h,
                                           const DiffusionSpec& a, const TorusGrid& grid,
                                           double eps, const AdaptiveOptions& opts,
                                           const std::optional<ScalarField>& init) {
  const double tol = tolerance_for(h, grid, opts);
  std::array<double, 2> box{opts.box_floor, grid.dim() == 2 ? opts.box_floor : 0.0};
  if (init) {
    const auto g = measured_gradient(*init);
    for (int k = 0; k < grid.dim(); ++k) box[k] = std::max(box[k], 2.0 * g[k]);
  }
  std::optional<ScalarField> guess = init;
  for (int round = 0; round < opts.max_rounds; ++round) {
    SchemeConfig cfg = make_scheme_config(h, grid, box, tol);
    cfg.max_newton = opts.max_newton;
    StationaryReport rep = solve_discounted(h, a, grid, eps, cfg, guess);
    const auto g = measured_gradient(rep.solution);
    bool accept = true;
    std::array<double, 2> next = box;
    for (int k = 0; k < grid.dim(); ++k) {
      const double target = std::max(opts.box_floor, 2.0 * g[k]);
      // Inside the box and the box not more than twice the default size.
      if (g[k] > box[k] || box[k] > 2.0 * target) accept = false;
      next[k] = target;
    }
    if (accept) return rep;
    box = next;
    guess = rep.solution;
  }
  std::ostringstream msg;
  msg << "gradient box did not settle after " << opts.max_rounds << " rounds (eps=" << eps
      << ")";
  throw NoConvergence(msg.str());
}

DegenerateLadder solve_degenerate_via_regularization(const HamiltonianSpec& h,
                                                     const DiffusionSpec& a,
                                                     const TorusGrid& grid, double eps,
                                                     const std::vector<double>& q_schedule,
                                                     double M, double m_growth,
                                                     const AdaptiveOptions& opts) {
  if (q_schedule.empty()) throw std::invalid_argument("degenerate ladder: empty q schedule");
  for (std::size_t i = 1; i < q_schedule.size(); ++i) {
    if (!(q_schedule[i] > q_schedule[i - 1])) {
      throw std::invalid_argument("degenerate ladder: q schedule must increase");
    }
  }
  if (!(m_growth > 2.0)) {
    throw std::invalid_argument("degenerate ladder: coercivity exponent must exceed 2");
  }

  struct Rung {
    HamiltonianSpec h;
    DiffusionSpec a;
  };
  std::vector<Rung> rungs;
  for (double q : q_schedule) {
    rungs.push_back({HamiltonianSpec::regularized(h, q, M + 1.0),
                     a.with_added_identity(1.0 / q, grid)});
  }

  // First pass sizes the box per rung; the union box then carries one
  // viscosity valid for every rung so the ladder differs only through q.
  std::array<double, 2> box{0.0, 0.0};
  std::vector<ScalarField> first;
  for (const Rung& r : rungs) {
    StationaryReport rep = solve_discounted_adaptive(r.h, r.a, grid, eps, opts);
    for (int k = 0; k < 2; ++k) box[k] = std::max(box[k], rep.scheme.gradient_box[k]);
    first.push_back(rep.solution);
  }
  const double tol = tolerance_for(rungs.front().h, grid, opts);
  SchemeConfig shared = make_scheme_config(rungs.front().h, grid, box, tol);
  shared.max_newton = opts.max_newton;
  for (std::size_t i = 1; i < rungs.size(); ++i) {
    shared = merge_scheme_configs(shared, make_scheme_config(rungs[i].h, grid, box, tol));
  }

  DegenerateLadder out{q_schedule, {}, (m_growth - 2.0) / (m_growth - 1.0), {}, {},
                       first.front(), shared};
  for (std::size_t i = 0; i < rungs.size(); ++i) {
    out.reports.push_back(
        solve_discounted(rungs[i].h, rungs[i].a, grid, eps, shared, first[i]));
    out.holder.push_back(holder_seminorm(out.reports.back().solution, out.gamma));
  }
  for (std::size_t i = 1; i < out.reports.size(); ++i) {
    const Eigen::VectorXd d =
        out.reports[i].solution.to_vector() - out.reports[i - 1].solution.to_vector();
    out.cauchy_gaps.push_back(sup(d));
  }
  if (out.reports.size() >= 2) {
    const std::size_t n = out.reports.size();
    const double qa = q_schedule[n - 2];
    const double qb = q_schedule[n - 1];
    const Eigen::VectorXd va = out.reports[n - 2].solution.to_vector();
    const Eigen::VectorXd vb = out.reports[n - 1].solution.to_vector();
    // v(q) ~ v_inf + K/q, solved from the last two rungs.
    out.extrapolated = ScalarField(grid, Eigen::VectorXd((qb * vb - qa * va) / (qb - qa)));
  } else {
    out.extrapolated = out.reports.front().solution;
  }
  return out;
}

}  // namespace torushj
