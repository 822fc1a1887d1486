#include "torushj/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "torushj/errors.hpp"
#include "torushj/io.hpp"

namespace torushj {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

double h_max(const TorusGrid& g) {
  double h = 0.0;
  for (int k = 0; k < g.dim(); ++k) h = std::max(h, g.spacing(k));
  return h;
}

double theta_sup(const SchemeConfig& s) { return std::max(s.theta[0], s.theta[1]); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::array<double, 2> max_gradient(const TorusGrid& g, const Eigen::VectorXd& v) {
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int k = 0; k < g.dim(); ++k) {
      const double d = std::abs(v[g.shift(i, k, 1)] - v[i]) / g.spacing(k);
      out[k] = std::max(out[k], d);
    }
  }
  return out;
}

double tolerance(const ExperimentConfig& cfg) {
  if (cfg.solver.tol_residual) return *cfg.solver.tol_residual;
  return default_tol_residual(sup_abs_H0(cfg.hamiltonian, grid_points(cfg.grid)));
}

std::optional<double> ssa4_L(const ExperimentConfig& cfg,
                             std::optional<double> forcing = std::nullopt) {
  const std::vector<Point> xs = grid_points(cfg.grid);
  const std::vector<VectorSample> dirs = unit_directions(cfg.grid.dim());
  try {
    return estimate_ssa4_L(cfg.hamiltonian, cfg.diffusion, xs, dirs, 1e-6, forcing);
  } catch (const NoFiniteL&) {
    return std::nullopt;
  }
}

void fill_structure_constants(const ExperimentConfig& cfg, ExperimentOutcome& out) {
  const HamiltonianMetadata& m = cfg.hamiltonian.metadata();
  out.constants["nu"] = cfg.diffusion.nu();
  out.constants["k"] = optional_json(m.k);
  out.constants["C"] = optional_json(m.C);
  out.constants["alpha"] = optional_json(m.alpha);
  out.constants["beta"] = optional_json(m.beta);
  out.constants["M"] = optional_json(m.growth_M);
  out.constants["Ctilde"] = ctilde(cfg.grid.dim(), cfg.diffusion.nu(), cfg.diffusion.sigma_sup(),
                                   cfg.diffusion.sigma_lip());
}

void finish(const ExperimentConfig& cfg, const ExperimentOutcome& out) {
  if (cfg.output_dir.empty()) return;
  write_json(cfg.output_dir / "manifest.json", manifest(cfg, out));
}

// Grows the gradient box until the discrete gradients stay inside it for the
// whole run. `base` is the smallest acceptable configuration.
Evolution evolve_in_box(const ExperimentConfig& cfg, const ScalarField& u0, double T,
                        const TimeStepConfig& tcfg, const SchemeConfig& base,
                        const std::vector<double>& snapshots, const StepObserver& observer,
                        SchemeConfig& used) {
  SchemeConfig scheme = base;
  const double tol = tolerance(cfg);
  for (int round = 0; round < 6; ++round) {
    std::array<double, 2> seen = max_gradient(cfg.grid, u0.to_vector());
    auto watch = [&](double t, const Eigen::VectorXd& u) {
      const auto g = max_gradient(cfg.grid, u);
      seen = {std::max(seen[0], g[0]), std::max(seen[1], g[1])};
      if (observer) observer(t, u);
    };
    Evolution ev = evolve(cfg.hamiltonian, cfg.diffusion, u0, T, tcfg, scheme, snapshots, watch);
    bool inside = true;
    std::array<double, 2> box = scheme.gradient_box;
    for (int k = 0; k < cfg.grid.dim(); ++k) {
      if (seen[k] > scheme.gradient_box[k]) {
        inside = false;
        box[k] = 2.0 * seen[k];
      }
    }
    if (inside) {
      used = scheme;
      return ev;
    }
    scheme = merge_scheme_configs(scheme, make_scheme_config(cfg.hamiltonian, cfg.grid, box, tol));
  }
  throw NoConvergence("evolution gradients keep leaving the certified box");
}

// Configuration covering twice the gradients of u0 and of the ergodic
// profile, with the viscosity of the ergodic solve as a floor.
SchemeConfig evolution_base_config(const ExperimentConfig& cfg, const ScalarField& u0) {
  SchemeConfig erg = ergodic_scheme_config(cfg.hamiltonian, cfg.diffusion, cfg.grid, cfg.solver);
  const auto g = max_gradient(cfg.grid, u0.to_vector());
  std::array<double, 2> box = erg.gradient_box;
  for (int k = 0; k < cfg.grid.dim(); ++k) box[k] = std::max(box[k], 2.0 * g[k]);
  if (box == erg.gradient_box) return erg;
  return merge_scheme_configs(erg, make_scheme_config(cfg.hamiltonian, cfg.grid, box, erg.tol_residual));
}

TimeStepConfig time_config(const ExperimentConfig& cfg) {
  TimeStepConfig t;
  t.dt = cfg.params.dt;
  t.cfl_safety = cfg.params.cfl_safety;
  t.assume_smooth_initial = cfg.params.u0_smooth;
  return t;
}

void add_lambda_checks(ExperimentOutcome& out, const Evolution& ev, const std::string& prefix) {
  if (!ev.lambda_checked) {
    out.add(prefix + "time_lipschitz_skipped", true, 0.0, 0.0,
            "initial data declared rough; Lambda checks skipped");
    return;
  }
  out.add(prefix + "sandwich", ev.worst_sandwich_excess <= 0.0, ev.worst_sandwich_excess, 0.0,
          "max over snapshots of |u - u0| - (Lambda t + tol)");
  out.add(prefix + "increment", ev.worst_increment_excess <= 0.0, ev.worst_increment_excess, 0.0,
          "max over steps of |u_{n+1} - u_n| - (Lambda dt + 2 tol)");
}

}  // namespace

// ---------------------------------------------------------------------------

bool ExperimentOutcome::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* ExperimentOutcome::find(const std::string& name) const {
  for (const Check& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void ExperimentOutcome::add(std::string name, bool passed, double value, double bound,
                            std::string note) {
  checks.push_back({std::move(name), passed, value, bound, std::move(note)});
}

json manifest(const ExperimentConfig& cfg, const ExperimentOutcome& outcome) {
  json checks = json::array();
  for (const Check& c : outcome.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", c.value},
                      {"bound", c.bound},
                      {"note", c.note}});
  }
  // Every named structure constant is present, null when the run has none.
  json constants = outcome.constants;
  for (const char* name : {"nu", "L", "k", "C", "alpha", "beta", "gamma", "chi", "A1", "A2", "r",
                           "Lambda", "theta", "eps", "q", "n", "M"}) {
    if (!constants.contains(name)) constants[name] = nullptr;
  }
  return json{{"experiment", outcome.experiment},
              {"config_hash", config_hash(cfg.raw)},
              {"version", kVersion},
              {"seed", cfg.seed},
              {"grid", {{"dim", cfg.grid.dim()}, {"counts", cfg.grid.counts()}}},
              {"hamiltonian", cfg.hamiltonian.tag()},
              {"constants", constants},
              {"checks", checks},
              {"all_passed", outcome.all_passed()},
              {"summary", outcome.summary}};
}

std::optional<OracleResult> hopf_cole_if_applicable(const HamiltonianSpec& h,
                                                    const DiffusionSpec& a,
                                                    const TorusGrid& grid) {
  const auto* pc = std::get_if<HamiltonianSpec::PowerCoercive>(&h.family());
  if (!pc || pc->k != 2.0 || !(a.nu() > 0.0)) return std::nullopt;
  std::vector<double> ell(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point x = grid.point(i);
    if (pc->a(x) != 1.0) return std::nullopt;
    Eigen::Matrix2d expected = Eigen::Matrix2d::Zero();
    for (int k = 0; k < grid.dim(); ++k) expected(k, k) = a.nu();
    if ((a.a(x) - expected).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + a.nu())) return std::nullopt;
    ell[i] = pc->ell(x);
  }
  return hopf_cole_ergodic(ScalarField(grid, std::move(ell)), a.nu());
}

double relative_spread(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*hi == 0.0) return 0.0;
  if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
  return (*hi - *lo) / *lo;
}

TightnessResult certificate_tightness(const ScalarField& field, double gamma,
                                      const PairScanOptions& opts) {
  TightnessResult r;
  if (oscillation(field) == 0.0) {
    r.vacuous = true;
    r.passed = true;
    return r;
  }
  r.seminorm = holder_seminorm(field, gamma, opts);
  r.M_at = doubling_certificate(field, CertificateParams::holder_power(r.seminorm, gamma), opts).M;
  r.M_below = doubling_certificate(
                  field, CertificateParams::holder_power(0.999999 * r.seminorm, gamma), opts)
                  .M;
  r.passed = r.M_at <= 0.0 && r.M_below > 0.0;
  return r;
}

// ---------------------------------------------------------------------------

EpsilonSweepResult run_epsilon_sweep(const ExperimentConfig& cfg) {
  const ExperimentParams& p = cfg.params;
  if (p.eps.empty()) throw ConfigError("epsilon sweep: empty eps list");
  ExperimentOutcome out;
  out.experiment = "epsilon_sweep";
  fill_structure_constants(cfg, out);

  const std::vector<Point> xs = grid_points(cfg.grid);
  const double h0 = sup_abs_H0(cfg.hamiltonian, xs);
  const std::optional<double> L = ssa4_L(cfg);

  // Adaptive solves fix each box; one shared viscosity then serves the whole
  // sweep so the rows differ only through eps.
  std::vector<std::future<StationaryReport>> first;
  for (double eps : p.eps) {
    first.push_back(std::async(std::launch::async, [&cfg, eps] {
      return solve_discounted_adaptive(cfg.hamiltonian, cfg.diffusion, cfg.grid, eps, cfg.solver);
    }));
  }
  std::vector<StationaryReport> adaptive;
  for (auto& f : first) adaptive.push_back(f.get());
  SchemeConfig shared = adaptive.front().scheme;
  for (const auto& r : adaptive) shared = merge_scheme_configs(shared, r.scheme);

  std::vector<std::future<StationaryReport>> second;
  for (std::size_t k = 0; k < p.eps.size(); ++k) {
    second.push_back(std::async(std::launch::async, [&, k] {
      return solve_discounted(cfg.hamiltonian, cfg.diffusion, cfg.grid, p.eps[k], shared,
                              adaptive[k].solution);
    }));
  }
  std::vector<StationaryReport> reports;
  for (auto& f : second) reports.push_back(f.get());

  std::optional<double> holder_gamma = p.holder_gamma;
  const auto& meta = cfg.hamiltonian.metadata();
  if (!holder_gamma && meta.k && *meta.k > 2.0) holder_gamma = (*meta.k - 2.0) / (*meta.k - 1.0);

  EpsilonSweepResult res{{}, {}, shared, L, h0, holder_gamma, {}};
  const double h = h_max(cfg.grid);
  const double slack_mp = 10.0 * h * theta_sup(shared);
  std::vector<double> lips, holders, certified;
  for (const StationaryReport& r : reports) {
    SweepRow row;
    row.eps = r.eps;
    row.linf = r.linf;
    row.eps_linf = r.eps_linf;
    row.osc = oscillation(r.solution);
    row.lip = lipschitz_seminorm(r.solution);
    if (holder_gamma) row.holder = holder_seminorm(r.solution, *holder_gamma);
    if (p.certificate_gamma) {
      const double a2 = minimal_certificate_A2(r.solution, *p.certificate_gamma);
      row.certified_constant =
          CertificateParams::concave_lip(row.osc, *p.certificate_gamma, a2).A1 * a2;
      certified.push_back(*row.certified_constant);
    }
    row.residual = r.residual_sup;
    row.iterations = r.iterations;
    lips.push_back(row.lip);
    if (row.holder) holders.push_back(*row.holder);

    std::ostringstream tag;
    tag << "[eps=" << r.eps << "]";
    out.add("max_principle" + tag.str(), row.eps_linf <= h0 + slack_mp, row.eps_linf,
            h0 + slack_mp, "eps |v|_inf <= |H(.,0)|_inf + 10 h theta_sup");
    if (L) {
      const double bound = std::sqrt(static_cast<double>(cfg.grid.dim())) * *L + 5.0 * h * row.lip;
      out.add("oscillation" + tag.str(), row.osc <= bound, row.osc, bound,
              "osc <= sqrt(d) L + 5 h Lip");
    }
    for (double gamma : p.gammas) {
      const TightnessResult t = certificate_tightness(r.solution, gamma);
      std::ostringstream name;
      name << "certificate_tightness" << tag.str() << "[gamma=" << gamma << "]";
      out.add(name.str(), t.passed, t.M_below, t.M_at, t.vacuous ? "constant field" : "");
    }
    res.rows.push_back(row);
    res.solutions.push_back(r.solution);
  }
  out.add("lipschitz_spread", relative_spread(lips) <= p.lipschitz_spread, relative_spread(lips),
          p.lipschitz_spread, "(max - min) / min over the sweep");
  if (!holders.empty()) {
    out.add("holder_spread", relative_spread(holders) <= p.holder_spread,
            relative_spread(holders), p.holder_spread, "(max - min) / min over the sweep");
  }

  // Numerical uniqueness: a random start must reach the same solution. The
  // start is a random offset plus random smooth modes kept inside the box,
  // where the scheme is monotone.
  {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double offset = 0.5 * unit(rng);
    std::vector<FourierTerm> modes;
    for (int f = 1; f <= 3; ++f) {
      FourierTerm t;
      t.freq = {f, cfg.grid.dim() == 2 ? f - 2 : 0};
      t.cos_coeff = unit(rng);
      t.sin_coeff = unit(rng);
      modes.push_back(t);
    }
    ScalarField bumps = ScalarField::sample(cfg.grid, fourier_coefficient(FourierSeries(modes)));
    const auto g = max_gradient(cfg.grid, bumps.to_vector());
    double scale = 1.0;
    for (int k = 0; k < cfg.grid.dim(); ++k) {
      if (g[k] > 0.0) scale = std::min(scale, 0.5 * shared.gradient_box[k] / g[k]);
    }
    if (bumps.sup_norm() > 0.0) scale = std::min(scale, 0.5 / bumps.sup_norm());
    std::vector<double> noise(cfg.grid.size());
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = offset + scale * bumps[i];
    const double eps = p.eps.front();
    const StationaryReport a = solve_discounted(cfg.hamiltonian, cfg.diffusion, cfg.grid, eps, shared,
                                                ScalarField::constant(cfg.grid, 0.0));
    const StationaryReport b = solve_discounted(cfg.hamiltonian, cfg.diffusion, cfg.grid, eps, shared,
                                                ScalarField(cfg.grid, std::move(noise)));
    const double gap = (a.solution.to_vector() - b.solution.to_vector()).lpNorm<Eigen::Infinity>();
    const double bound = 10.0 * shared.tol_residual / std::min(eps, 1.0);
    out.add("init_independence", gap <= bound, gap, bound,
            "init 0 vs random smooth init, largest eps of the sweep");
  }

  const double linf_ratio = res.rows.front().linf > 0.0
                                ? std::max(res.rows.front().linf, res.rows.back().linf) /
                                      std::min(res.rows.front().linf, res.rows.back().linf)
                                : 0.0;
  out.summary["linf_ratio_extremes"] = linf_ratio;
  out.summary["lipschitz_spread"] = relative_spread(lips);
  if (!certified.empty()) out.summary["certified_constant_spread"] = relative_spread(certified);
  out.constants["L"] = optional_json(L);
  out.constants["theta"] = shared.theta;
  out.constants["eps"] = p.eps;
  out.constants["gamma"] = optional_json(holder_gamma);
  out.constants["H0_sup"] = h0;

  if (!cfg.output_dir.empty()) {
    std::vector<std::vector<double>> table;
    for (const SweepRow& r : res.rows) {
      table.push_back({r.eps, r.linf, r.eps_linf, r.osc, r.lip,
                       r.holder.value_or(std::nan("")),
                       r.certified_constant.value_or(std::nan("")), r.residual});
    }
    write_table_csv(cfg.output_dir / "sweep.csv",
                    {"eps", "linf", "eps_linf", "osc", "lip", "holder", "A1A2", "residual"}, table);
    for (std::size_t k = 0; k < res.solutions.size(); ++k) {
      write_field_csv(cfg.output_dir / ("v_eps_" + std::to_string(k) + ".csv"), res.solutions[k]);
    }
  }
  res.outcome = std::move(out);
  finish(cfg, res.outcome);
  return res;
}

StationaryRun run_stationary(const ExperimentConfig& cfg) {
  ExperimentOutcome out;
  out.experiment = "stationary";
  fill_structure_constants(cfg, out);
  const double eps = cfg.params.eps_single;
  StationaryReport rep =
      solve_discounted_adaptive(cfg.hamiltonian, cfg.diffusion, cfg.grid, eps, cfg.solver);
  const double h0 = sup_abs_H0(cfg.hamiltonian, grid_points(cfg.grid));
  const double bound = h0 + 10.0 * h_max(cfg.grid) * theta_sup(rep.scheme);
  out.add("max_principle", rep.eps_linf <= bound, rep.eps_linf, bound);
  out.add("residual", rep.residual_sup <= rep.scheme.tol_residual, rep.residual_sup,
          rep.scheme.tol_residual);
  out.constants["eps"] = eps;
  out.constants["theta"] = rep.scheme.theta;
  out.summary = {{"method", to_string(rep.method)},
                 {"iterations", rep.iterations},
                 {"linf", rep.linf},
                 {"osc", oscillation(rep.solution)},
                 {"lip", lipschitz_seminorm(rep.solution)}};
  if (!cfg.output_dir.empty()) {
    write_field_csv(cfg.output_dir / "solution.csv", rep.solution);
    write_json(cfg.output_dir / "solution.json", field_to_json(rep.solution));
  }
  finish(cfg, out);
  return {std::move(rep), std::move(out)};
}

ErgodicRun run_ergodic(const ExperimentConfig& cfg) {
  ExperimentOutcome out;
  out.experiment = "ergodic";
  fill_structure_constants(cfg, out);
  const SchemeConfig scheme =
      ergodic_scheme_config(cfg.hamiltonian, cfg.diffusion, cfg.grid, cfg.solver);
  ErgodicSolution direct = solve_direct(cfg.hamiltonian, cfg.diffusion, cfg.grid, scheme);
  ErgodicSolution vanishing = solve_vanishing_discount(cfg.hamiltonian, cfg.diffusion, cfg.grid,
                                                       cfg.params.eps_schedule, scheme);
  std::optional<OracleResult> oracle =
      hopf_cole_if_applicable(cfg.hamiltonian, cfg.diffusion, cfg.grid);

  const double h = h_max(cfg.grid);
  const double dc = std::abs(direct.c - vanishing.c);
  out.add("route_agreement_c", dc <= std::max(1e-3, 5.0 * h), dc, std::max(1e-3, 5.0 * h));
  const double dv = (direct.v0.to_vector() - vanishing.v0.to_vector()).lpNorm<Eigen::Infinity>();
  out.add("route_agreement_v0", dv <= std::max(1e-2, 10.0 * h), dv, std::max(1e-2, 10.0 * h));
  out.add("direct_residual", direct.residual_sup <= scheme.tol_residual, direct.residual_sup,
          scheme.tol_residual);
  if (oracle) {
    const double ed = std::abs(direct.c - *oracle->c);
    const double ev = std::abs(vanishing.c - *oracle->c);
    out.add("oracle_direct", ed <= 1e-3, ed, 1e-3, "Hopf-Cole eigenvalue oracle");
    out.add("oracle_vanishing", ev <= 5e-3, ev, 5e-3, "Hopf-Cole eigenvalue oracle");
    out.summary["c_oracle"] = *oracle->c;
  }
  out.summary["c_direct"] = direct.c;
  out.summary["c_vanishing"] = vanishing.c;
  out.summary["lip_v0"] = lipschitz_seminorm(direct.v0);
  out.constants["theta"] = scheme.theta;
  out.constants["eps"] = cfg.params.eps_schedule;
  if (!cfg.output_dir.empty()) {
    write_field_csv(cfg.output_dir / "v0_direct.csv", direct.v0);
    write_field_csv(cfg.output_dir / "v0_vanishing.csv", vanishing.v0);
    write_convergence_csv(cfg.output_dir / "convergence_vanishing.csv",
                          vanishing.convergence_table);
    write_convergence_csv(cfg.output_dir / "convergence_direct.csv", direct.convergence_table);
    if (oracle) write_field_csv(cfg.output_dir / "v0_oracle.csv", *oracle->field);
  }
  finish(cfg, out);
  return {std::move(direct), std::move(vanishing), std::move(oracle), std::move(out)};
}

EvolveRun run_evolve(const ExperimentConfig& cfg) {
  const ExperimentParams& p = cfg.params;
  ExperimentOutcome out;
  out.experiment = "evolve";
  fill_structure_constants(cfg, out);
  const ScalarField u0 = ScalarField::sample(cfg.grid, p.u0);
  const TimeStepConfig tcfg = time_config(cfg);
  SchemeConfig used;
  Evolution ev = evolve_in_box(cfg, u0, p.T, tcfg, evolution_base_config(cfg, u0), p.snapshots,
                               {}, used);
  add_lambda_checks(out, ev, "");

  std::vector<RegularizedEvolution> ladder;
  if (p.n_trunc > 0.0 && p.M > 2.0) {
    // Every rung uses one viscosity valid for the truncated, regularised
    // Hamiltonians on the realised gradient range.
    SchemeConfig lad = used;
    for (double q : p.q) {
      const HamiltonianSpec hqn = HamiltonianSpec::regularized(
          HamiltonianSpec::truncated(cfg.hamiltonian, p.n_trunc), q, p.M);
      lad = merge_scheme_configs(lad, make_scheme_config(hqn, cfg.grid, used.gradient_box,
                                                         used.tol_residual));
    }
    TimeStepConfig fixed = tcfg;
    fixed.dt = 0.0;
    const Evolution reference =
        evolve(cfg.hamiltonian, cfg.diffusion, u0, p.T, fixed, lad, ev.snapshot_times);
    for (double q : p.q) {
      ladder.push_back(evolve_regularized(cfg.hamiltonian, cfg.diffusion, u0, p.T, q, p.n_trunc,
                                          p.M, tcfg, lad, reference));
      add_lambda_checks(out, ladder.back().evolution, "ladder[q=" + std::to_string(q) + "].");
    }
    if (ladder.size() >= 2) {
      const double first = *std::max_element(ladder.front().sup_gap.begin(), ladder.front().sup_gap.end());
      const double last = *std::max_element(ladder.back().sup_gap.begin(), ladder.back().sup_gap.end());
      out.add("ladder_self_convergence", last <= 0.2 * first || first == 0.0, last, 0.2 * first,
              "sup gap at the largest q <= 0.2 x gap at the smallest q");
    }
  }
  out.constants["Lambda"] = ev.lambda_bound;
  out.constants["theta"] = used.theta;
  out.constants["q"] = p.q;
  out.constants["n"] = p.n_trunc;
  out.summary = {{"dt", ev.dt},
                 {"steps", ev.steps},
                 {"lambda_scheme", ev.lambda_scheme},
                 {"max_increment_rate", ev.max_increment_rate}};
  if (!cfg.output_dir.empty()) {
    write_evolution(cfg.output_dir / "evolution", ev, out.summary);
    for (const RegularizedEvolution& r : ladder) {
      std::ostringstream name;
      name << "ladder_q" << r.q;
      json diag{{"q", r.q}, {"n", r.n_trunc}, {"M", r.M}, {"gamma", r.gamma},
                {"sup_gap", r.sup_gap}, {"holder", r.holder}};
      write_evolution(cfg.output_dir / name.str(), r.evolution, diag);
    }
  }
  finish(cfg, out);
  return {std::move(ev), used, std::move(ladder), std::move(out)};
}

LargeTimeReport run_large_time(const ExperimentConfig& cfg) {
  const ExperimentParams& p = cfg.params;
  ExperimentOutcome out;
  out.experiment = "large_time";
  fill_structure_constants(cfg, out);
  const ScalarField u0 = ScalarField::sample(cfg.grid, p.u0);
  SchemeConfig scheme = evolution_base_config(cfg, u0);
  ErgodicSolution erg = solve_direct(cfg.hamiltonian, cfg.diffusion, cfg.grid, scheme);

  std::vector<std::array<double, 2>> m_curve, gap_curve;
  SchemeConfig used;
  for (int attempt = 0; attempt < 3; ++attempt) {
    const Eigen::VectorXd v0 = erg.v0.to_vector();
    const double c = erg.c;
    m_curve.clear();
    gap_curve.clear();
    auto observe = [&](double t, const Eigen::VectorXd& u) {
      if (!m_curve.empty() && t <= m_curve.back()[0]) {
        m_curve.clear();  // the box grew and the run restarted
        gap_curve.clear();
      }
      const Eigen::VectorXd w = (u.array() + c * t).matrix() - v0;
      const double m = w.maxCoeff();
      m_curve.push_back({t, m});
      gap_curve.push_back({t, (w.array() - m).abs().maxCoeff()});
    };
    const Eigen::VectorXd w0 = u0.to_vector() - v0;
    m_curve.push_back({0.0, w0.maxCoeff()});
    gap_curve.push_back({0.0, (w0.array() - w0.maxCoeff()).abs().maxCoeff()});
    Evolution ev = evolve_in_box(cfg, u0, p.T, time_config(cfg), scheme, p.snapshots, observe, used);
    if (used.theta != scheme.theta) {
      // v0 must be the steady profile of the very scheme that evolves.
      scheme = used;
      erg = solve_direct(cfg.hamiltonian, cfg.diffusion, cfg.grid, scheme);
      continue;
    }
    // Restore the t = 0 row if a restart cleared it.
    if (m_curve.front()[0] != 0.0) {
      m_curve.insert(m_curve.begin(), {0.0, w0.maxCoeff()});
      gap_curve.insert(gap_curve.begin(), {0.0, (w0.array() - w0.maxCoeff()).abs().maxCoeff()});
    }
    const double lambda = ev.lambda_bound;
    const double step_tol = 1e-6 * (1.0 + lambda);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < m_curve.size(); ++k) {
      worst = std::max(worst, m_curve[k][1] - m_curve[k - 1][1]);
    }
    const double final_gap = gap_curve.back()[1];
    out.add("m_nonincreasing", worst <= step_tol, worst, step_tol,
            "max per-step increase of m(t) = max_x(u + ct - v0)");
    out.add("large_time_gap", final_gap <= p.large_time_threshold, final_gap,
            p.large_time_threshold, "sup_x |u + cT - v0 - m(T)|");
    add_lambda_checks(out, ev, "");
    out.constants["Lambda"] = lambda;
    out.constants["theta"] = used.theta;
    out.summary = {{"c", c}, {"ell_limit", m_curve.back()[1]}, {"steps", ev.steps}, {"dt", ev.dt}};
    if (!cfg.output_dir.empty()) {
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < m_curve.size(); ++k) {
        rows.push_back({m_curve[k][0], m_curve[k][1], gap_curve[k][1]});
      }
      write_table_csv(cfg.output_dir / "large_time.csv", {"t", "m", "sup_gap"}, rows);
      write_field_csv(cfg.output_dir / "v0.csv", erg.v0);
      write_evolution(cfg.output_dir / "evolution", ev, out.summary);
    }
    finish(cfg, out);
    const double ell = m_curve.back()[1];
    return {c, erg.v0, std::move(m_curve), std::move(gap_curve), ell, lambda, worst,
            std::move(ev), std::move(out)};
  }
  throw NoConvergence("large time: viscosity kept growing");
}

CesaroResult run_cesaro(const ExperimentConfig& cfg) {
  const ExperimentParams& p = cfg.params;
  ExperimentOutcome out;
  out.experiment = "cesaro";
  fill_structure_constants(cfg, out);
  const ScalarField u0 = ScalarField::sample(cfg.grid, p.u0);
  const double T_end = std::max(p.T, p.T_long);

  // Uniform snapshots with a step that divides their spacing, so that the
  // discrete semigroup property holds exactly at snapshot times.
  const int K = 20;
  const double spacing = p.T / K;
  std::vector<double> snaps{0.0};
  for (int k = 1; spacing * k <= T_end * (1.0 + 1e-12); ++k) snaps.push_back(std::min(spacing * k, T_end));
  if (snaps.back() < T_end) snaps.push_back(T_end);

  SchemeConfig scheme = evolution_base_config(cfg, u0);
  TimeStepConfig tcfg = time_config(cfg);
  {
    const DiscreteOperator op(cfg.grid, cfg.hamiltonian, cfg.diffusion, scheme);
    const double limit = tcfg.cfl_safety / op.hamiltonian_cfl_rate();
    if (tcfg.dt <= 0.0) tcfg.dt = spacing / std::ceil(spacing / limit);
  }
  SchemeConfig used;
  Evolution ev = evolve_in_box(cfg, u0, T_end, tcfg, scheme, snaps, {}, used);
  const ErgodicSolution erg = solve_direct(cfg.hamiltonian, cfg.diffusion, cfg.grid, used);
  const double c = erg.c;

  std::vector<CesaroRow> rows;
  std::vector<double> maxes, mins;
  for (std::size_t s = 0; s < ev.snapshots.size(); ++s) {
    const double t = ev.snapshot_times[s];
    maxes.push_back(ev.snapshots[s].max());
    mins.push_back(ev.snapshots[s].min());
    if (t > 0.0) rows.push_back({t, maxes.back() / t, mins.back() / t});
  }
  auto error_at = [&](double t) {
    const auto it = std::find(ev.snapshot_times.begin(), ev.snapshot_times.end(), t);
    const std::size_t s = static_cast<std::size_t>(it - ev.snapshot_times.begin());
    const Eigen::VectorXd r = (ev.snapshots[s].to_vector() / t).array() + c;
    return r.lpNorm<Eigen::Infinity>();
  };
  const double eT = error_at(snaps[static_cast<std::size_t>(K)]);
  const double eL = error_at(T_end);
  out.add("cesaro_T", eT <= p.cesaro_threshold, eT, p.cesaro_threshold, "max_x |u(x,T)/T + c|");
  if (T_end > p.T) {
    out.add("cesaro_decay", eL <= 0.6 * eT, eL, 0.6 * eT, "error at T_long <= 0.6 x error at T");
  }

  // With u0 = 0 the maximum is subadditive and the minimum superadditive.
  double worst_sub = -std::numeric_limits<double>::infinity();
  double worst_sup = -std::numeric_limits<double>::infinity();
  if (u0.sup_norm() == 0.0) {
    const double tol = ev.tol + 1e-12 * (1.0 + std::abs(c) * T_end);
    for (std::size_t i = 1; i < snaps.size(); ++i) {
      for (std::size_t j = i; i + j < snaps.size(); ++j) {
        if (std::abs(snaps[i] + snaps[j] - snaps[i + j]) > 1e-9 * T_end) continue;
        worst_sub = std::max(worst_sub, maxes[i + j] - maxes[i] - maxes[j]);
        worst_sup = std::max(worst_sup, mins[i] + mins[j] - mins[i + j]);
      }
    }
    out.add("max_subadditive", worst_sub <= tol, worst_sub, tol, "max_x u(t+s) <= max u(t) + max u(s)");
    out.add("min_superadditive", worst_sup <= tol, worst_sup, tol, "min_x u(t+s) >= min u(t) + min u(s)");
  } else {
    worst_sub = worst_sup = 0.0;
    out.add("subadditivity_skipped", true, 0.0, 0.0, "needs u0 = 0");
  }

  // Parabolic cone bound around the running minimum.
  const std::optional<double> L = ssa4_L(cfg, ev.lambda_bound);
  double worst_cone = -std::numeric_limits<double>::infinity();
  if (L) {
    const double h = h_max(cfg.grid);
    for (std::size_t s = 1; s < ev.snapshots.size(); ++s) {
      const ScalarField& f = ev.snapshots[s];
      const ConeCheck cc = cone_bound_check(f, *L);
      worst_cone = std::max(worst_cone, cc.worst_defect - 5.0 * h * lipschitz_seminorm(f));
    }
    out.add("parabolic_cone", worst_cone <= 0.0, worst_cone, 0.0,
            "u(x,t) - min u(.,t) <= L d(x, argmin) + 5 h Lip");
  }
  add_lambda_checks(out, ev, "");
  out.constants["L"] = optional_json(L);
  out.constants["Lambda"] = ev.lambda_bound;
  out.constants["theta"] = used.theta;
  out.summary = {{"c", c}, {"error_T", eT}, {"error_T_long", eL}, {"dt", ev.dt}};
  if (!cfg.output_dir.empty()) {
    std::vector<std::vector<double>> table;
    for (const CesaroRow& r : rows) table.push_back({r.t, r.max_ratio, r.min_ratio});
    write_table_csv(cfg.output_dir / "cesaro.csv", {"t", "max_u_over_t", "min_u_over_t"}, table);
    write_evolution(cfg.output_dir / "evolution", ev, out.summary);
  }
  finish(cfg, out);
  return {c, std::move(rows), eT, eL, worst_sub, worst_sup, L, worst_cone, std::move(ev),
          std::move(out)};
}

LadderRun run_degenerate_ladder(const ExperimentConfig& cfg) {
  const ExperimentParams& p = cfg.params;
  ExperimentOutcome out;
  out.experiment = "degenerate_ladder";
  fill_structure_constants(cfg, out);
  const double m_growth = cfg.hamiltonian.metadata().k.value_or(p.M);
  DegenerateLadder lad = solve_degenerate_via_regularization(
      cfg.hamiltonian, cfg.diffusion, cfg.grid, p.eps_single, p.q, p.M, m_growth, cfg.solver);
  const double spread = relative_spread(lad.holder);
  out.add("holder_spread", spread <= p.ladder_spread, spread, p.ladder_spread,
          "(max - min) / min of the Hoelder seminorm across q");
  bool decreasing = true;
  for (std::size_t k = 1; k < lad.cauchy_gaps.size(); ++k) {
    decreasing = decreasing && lad.cauchy_gaps[k] < lad.cauchy_gaps[k - 1];
  }
  const bool trivial = std::all_of(lad.cauchy_gaps.begin(), lad.cauchy_gaps.end(),
                                   [&](double g) { return g <= 10.0 * lad.scheme.tol_residual; });
  out.add("gaps_decreasing", decreasing || trivial,
          lad.cauchy_gaps.empty() ? 0.0 : lad.cauchy_gaps.back(),
          lad.cauchy_gaps.empty() ? 0.0 : lad.cauchy_gaps.front(),
          "consecutive-q sup gaps decrease");
  out.constants["q"] = p.q;
  out.constants["M"] = p.M;
  out.constants["gamma"] = lad.gamma;
  out.constants["eps"] = p.eps_single;
  out.constants["theta"] = lad.scheme.theta;
  out.summary = {{"holder", lad.holder}, {"cauchy_gaps", lad.cauchy_gaps}};
  if (!cfg.output_dir.empty()) {
    std::vector<std::vector<double>> table;
    for (std::size_t k = 0; k < lad.q.size(); ++k) {
      table.push_back({lad.q[k], lad.holder[k], k ? lad.cauchy_gaps[k - 1] : std::nan(""),
                       lad.reports[k].linf});
      write_field_csv(cfg.output_dir / ("v_q_" + std::to_string(k) + ".csv"),
                      lad.reports[k].solution);
    }
    write_table_csv(cfg.output_dir / "ladder.csv", {"q", "holder", "gap_from_previous", "linf"},
                    table);
    write_field_csv(cfg.output_dir / "extrapolated.csv", lad.extrapolated);
  }
  finish(cfg, out);
  return {std::move(lad), std::move(out)};
}

CertifyRun run_certify(const ExperimentConfig& cfg) {
  const ExperimentParams& p = cfg.params;
  ExperimentOutcome out;
  out.experiment = "certify";
  fill_structure_constants(cfg, out);
  ScalarField field = p.field ? read_field(*p.field)
                              : solve_discounted_adaptive(cfg.hamiltonian, cfg.diffusion, cfg.grid,
                                                          p.eps_single, cfg.solver)
                                    .solution;
  PairScanOptions scan;
  scan.seed = cfg.seed;
  const double cert_gamma = p.certificate_gamma.value_or(0.5);
  std::optional<double> L;
  if (!p.field || field.grid() == cfg.grid) L = ssa4_L(cfg);

  RegularityReport rep = analyze(field, p.gammas, cert_gamma, L, scan);
  std::vector<TightnessResult> tight;
  for (double gamma : p.gammas) {
    tight.push_back(certificate_tightness(field, gamma, scan));
    std::ostringstream name;
    name << "certificate_tightness[gamma=" << gamma << "]";
    out.add(name.str(), tight.back().passed, tight.back().M_below, tight.back().M_at,
            tight.back().vacuous ? "constant field" : "");
  }

  std::optional<double> brute, scanned;
  if (pair_count(field.grid()) <= scan.pair_cap) {
    const CertificateParams& cp = *rep.certificate;
    brute = brute_pair_max(field, [&cp](double s) { return cp.psi(s); }).M;
    scanned = rep.certificate_result->M;
    out.add("scan_equivalence", *brute == *scanned, *scanned, *brute,
            "exhaustive oracle and analyzer agree exactly");
  }

  std::vector<std::pair<double, double>> a2s;
  for (double gamma : p.gammas) {
    if (gamma >= 1.0) continue;
    a2s.emplace_back(gamma, minimal_certificate_A2(field, gamma, scan));
  }
  bool antitone = true;
  for (std::size_t k = 1; k < a2s.size(); ++k) antitone = antitone && a2s[k].second <= a2s[k - 1].second;
  out.summary["minimal_A2_antitone_in_gamma"] = antitone;

  if (rep.cone) {
    const double slack = 5.0 * h_max(field.grid()) * rep.lip;
    out.add("cone_bound", rep.cone->worst_defect <= slack, rep.cone->worst_defect, slack,
            "v(x) - v(x_min) - L d(x, x_min) <= 5 h Lip");
  }
  out.constants["gamma"] = cert_gamma;
  out.constants["A1"] = rep.certificate->A1;
  out.constants["A2"] = rep.certificate->A2;
  out.constants["r"] = rep.certificate->r;
  out.constants["L"] = optional_json(L);
  json holder = json::object();
  for (const auto& [g, v] : rep.holder) holder[format_double(g)] = v;
  out.summary["osc"] = rep.osc;
  out.summary["lip"] = rep.lip;
  out.summary["holder"] = holder;
  out.summary["certified_constant"] = optional_json(rep.certified_constant);
  out.summary["certificate_M"] = rep.certificate_result->M;
  out.summary["certificate_slack"] = rep.certificate_result->slack;
  out.summary["certified_with_slack"] = rep.certificate_result->certified;
  if (!cfg.output_dir.empty()) {
    std::vector<std::vector<double>> table;
    for (const auto& [g, v] : rep.holder) table.push_back({g, v});
    write_table_csv(cfg.output_dir / "holder.csv", {"gamma", "seminorm"}, table);
    write_json(cfg.output_dir / "regularity.json",
               {{"osc", rep.osc}, {"lip", rep.lip}, {"holder", holder},
                {"certificate",
                 {{"gamma", cert_gamma}, {"A1", rep.certificate->A1}, {"A2", rep.certificate->A2},
                  {"r", rep.certificate->r}, {"M", rep.certificate_result->M},
                  {"argmax", {rep.certificate_result->argmax.x, rep.certificate_result->argmax.y}},
                  {"slack", rep.certificate_result->slack}}},
                {"cone", rep.cone ? json{{"L", rep.cone->L}, {"worst_defect", rep.cone->worst_defect}}
                                  : json(nullptr)}});
  }
  finish(cfg, out);
  return {std::move(field), std::move(rep), std::move(tight), brute, scanned, std::move(a2s),
          std::move(out)};
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  const std::string& e = cfg.experiment;
  if (e == "epsilon_sweep") return run_epsilon_sweep(cfg).outcome;
  if (e == "stationary") return run_stationary(cfg).outcome;
  if (e == "ergodic") return run_ergodic(cfg).outcome;
  if (e == "evolve") return run_evolve(cfg).outcome;
  if (e == "large_time") return run_large_time(cfg).outcome;
  if (e == "cesaro") return run_cesaro(cfg).outcome;
  if (e == "degenerate_ladder") return run_degenerate_ladder(cfg).outcome;
  if (e == "certify") return run_certify(cfg).outcome;
  throw ConfigError("unknown experiment '" + e + "'");
}

}  // namespace torushj
