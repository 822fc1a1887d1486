#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "torushj/ergodic_solver.hpp"
#include "torushj/parabolic_solver.hpp"

using namespace torushj;
using namespace testsupport;

namespace {

const DiffusionSpec kId = DiffusionSpec::isotropic(1, 1.0);

HamiltonianSpec zero_hamiltonian() {
  return HamiltonianSpec::sublinear([](const Point&) { return Eigen::Vector2d(0.0, 0.0); },
                                    constant_coefficient(0.0));
}

ScalarField smooth_start(const TorusGrid& g, double amp, double phase) {
  return ScalarField::sample(g, [&](const Point& x) {
    return amp * (std::sin(kTwoPi * x[0] + phase) + 0.3 * std::cos(2.0 * kTwoPi * x[0]));
  });
}

}  // namespace

TEST_CASE("time-Lipschitz constant examples") {
  const TorusGrid g = TorusGrid::line(64);
  const ScalarField flat = ScalarField::constant(g, 2.5);
  CHECK(lambda_bound(power_const(2.0, 1.0), kId, flat) == doctest::Approx(1.0));
  CHECK(lambda_bound(power_cos(3.0), kId, flat) == doctest::Approx(1.0));
  CHECK(lambda_bound(power_const(2.0, -4.0), DiffusionSpec::zero(1), flat) == doctest::Approx(4.0));

  // 0.1 sin(2 pi x), A = I, H = |p|^2: |(0.2 pi cos)^2 + 0.4 pi^2 sin| on a
  // dense scan of the closed form.
  const TorusGrid fine = TorusGrid::line(256);
  const ScalarField u0 =
      ScalarField::sample(fine, [](const Point& x) { return 0.1 * std::sin(kTwoPi * x[0]); });
  double exact = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = i / 100000.0;
    const double c = std::cos(kTwoPi * x), s = std::sin(kTwoPi * x);
    exact = std::max(exact, std::abs(0.04 * M_PI * M_PI * c * c + 0.4 * M_PI * M_PI * s));
  }
  CHECK(std::abs(lambda_bound(power_const(2.0, 0.0), kId, u0) - exact) <= 0.02 * exact);
}

TEST_CASE("single IMEX steps") {
  const TorusGrid g = TorusGrid::line(128);
  SUBCASE("constant dynamics") {
    const SchemeConfig cfg = make_scheme_config(power_const(2.0, 1.0), g, {1.0, 0.0}, 1e-8);
    const TimeStepConfig t{0.002};
    const ScalarField u = step_imex(ScalarField::constant(g, 0.0), power_const(2.0, 1.0), kId, t, cfg);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(u[i] == doctest::Approx(-0.002).epsilon(1e-12));
    CHECK_THROWS_AS(step_imex(u, power_const(2.0, 1.0), kId, TimeStepConfig{1.0}, cfg),
                    std::invalid_argument);
  }
  SUBCASE("ergodic profile is steady for H - c") {
    const SchemeConfig cfg = ergodic_scheme_config(power_cos(2.0), kId, g);
    const ErgodicSolution e = solve_direct(power_cos(2.0), kId, g, cfg);
    const HamiltonianSpec shifted = HamiltonianSpec::offset(power_cos(2.0), -e.c);
    ImexStepper stepper(DiscreteOperator(g, shifted, kId, e.scheme));
    const TimeStepConfig t{0.5 * stepper.cfl_limit()};
    const ScalarField u = step_imex(e.v0, shifted, kId, t, e.scheme);
    CHECK(sup_diff(u, e.v0) <= 2.0 * e.scheme.tol_residual);
  }
  SUBCASE("heat step matches the implicit Euler factor") {
    SchemeConfig cfg;
    const double dt = 1e-3;
    const ScalarField u0 =
        ScalarField::sample(g, [](const Point& x) { return std::cos(kTwoPi * x[0]); });
    const ScalarField u = step_imex(u0, zero_hamiltonian(), kId, TimeStepConfig{dt}, cfg);
    const double h = g.spacing(0);
    // Discrete symbol 4 sin^2(pi h) / h^2 against 4 pi^2.
    const double symbol = 4.0 * std::pow(std::sin(M_PI * h), 2) / (h * h);
    double worst_discrete = 0.0, worst_continuum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      worst_discrete = std::max(worst_discrete, std::abs(u[i] - u0[i] / (1.0 + dt * symbol)));
      worst_continuum =
          std::max(worst_continuum, std::abs(u[i] - u0[i] / (1.0 + 4.0 * M_PI * M_PI * dt)));
    }
    CHECK(worst_discrete <= 1e-12);
    CHECK(worst_continuum <= dt * (4.0 * M_PI * M_PI - symbol) + 1e-12);
  }
}

TEST_CASE("evolution examples") {
  const TorusGrid g = TorusGrid::line(128);
  SUBCASE("constant dynamics to T = 1") {
    const SchemeConfig cfg = make_scheme_config(power_const(2.0, 1.0), g, {1.0, 0.0}, 1e-8);
    const Evolution ev = evolve(power_const(2.0, 1.0), kId, ScalarField::constant(g, 0.0), 1.0,
                                TimeStepConfig{}, cfg);
    CHECK(ev.snapshot_times == default_snapshot_times(1.0));
    CHECK(ev.snapshots.front().sup_norm() == 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(ev.snapshots.back()[i] == doctest::Approx(-1.0).epsilon(1e-9));
    }
    CHECK(!ev.lambda_violated);
  }
  SUBCASE("ergodic steady state over T = 1") {
    const SchemeConfig cfg = ergodic_scheme_config(power_cos(2.0), kId, g);
    const ErgodicSolution e = solve_direct(power_cos(2.0), kId, g, cfg);
    const HamiltonianSpec shifted = HamiltonianSpec::offset(power_cos(2.0), -e.c);
    const Evolution ev = evolve(shifted, kId, e.v0, 1.0, TimeStepConfig{}, e.scheme);
    for (const ScalarField& s : ev.snapshots) CHECK(sup_diff(s, e.v0) <= 1e-4);
  }
  SUBCASE("u / t approaches -c") {
    const SchemeConfig cfg = ergodic_scheme_config(power_cos(2.0), kId, g);
    const ErgodicSolution e = solve_direct(power_cos(2.0), kId, g, cfg);
    std::array<double, 2> box = e.scheme.gradient_box;
    double worst_gradient = 0.0;
    const DiscreteOperator op(g, power_cos(2.0), kId, e.scheme);
    const Evolution ev =
        evolve(power_cos(2.0), kId, ScalarField::constant(g, 0.0), 20.0, TimeStepConfig{}, e.scheme,
               {0.0, 20.0}, [&](double, const Eigen::VectorXd& u) {
                 worst_gradient = std::max(worst_gradient, op.max_one_sided_gradient(u)[0]);
               });
    CHECK(worst_gradient <= box[0]);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      err = std::max(err, std::abs(ev.snapshots.back()[i] / 20.0 + e.c));
    }
    CHECK(err <= 1e-2);
  }
}

TEST_CASE("sandwich and increment bounds on smooth data") {
  for (const CatalogEntry& e : catalog(64, 16)) {
    CAPTURE(e.name);
    const ScalarField u0 = ScalarField::sample(e.grid, [](const Point& x) {
      return 0.2 * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]);
    });
    const SchemeConfig cfg = make_scheme_config(e.h, e.grid, {4.0, 4.0}, 1e-8);
    const Evolution ev = evolve(e.h, e.a, u0, 0.5, TimeStepConfig{}, cfg);
    CHECK(ev.lambda_checked);
    CHECK(!ev.lambda_violated);
    CHECK(ev.worst_sandwich_excess <= 0.0);
    CHECK(ev.worst_increment_excess <= 0.0);
    const double lam = ev.lambda_effective();
    for (std::size_t s = 0; s < ev.snapshots.size(); ++s) {
      const double band = lam * ev.snapshot_times[s] + ev.tol;
      CHECK(sup_diff(ev.snapshots[s], u0) <= band);
    }
    // Time shifts between any two snapshots.
    for (std::size_t a = 0; a < ev.snapshots.size(); ++a) {
      for (std::size_t b = a + 1; b < ev.snapshots.size(); ++b) {
        const double s = ev.snapshot_times[b] - ev.snapshot_times[a];
        CHECK(sup_diff(ev.snapshots[b], ev.snapshots[a]) <= lam * s + 2.0 * ev.tol);
      }
    }
  }
}

TEST_CASE("rough data skips the time-Lipschitz checks") {
  const TorusGrid g = TorusGrid::line(64);
  TimeStepConfig t;
  t.assume_smooth_initial = false;
  const SchemeConfig cfg = make_scheme_config(power_cos(2.0), g, {300.0, 0.0}, 1e-8);
  const Evolution ev = evolve(power_cos(2.0), kId, random_field(g, 5), 0.05, t, cfg);
  CHECK(!ev.lambda_checked);
  CHECK(!ev.lambda_violated);
}

TEST_CASE("discrete comparison in time") {
  const TorusGrid g = TorusGrid::line(128);
  const ScalarField u0 = smooth_start(g, 0.2, 0.0);
  const ScalarField w0 = ScalarField(
      g, Eigen::VectorXd(u0.to_vector().array() + 0.05 + 0.04 * smooth_start(g, 1.0, 1.0).to_vector().array()));
  REQUIRE((w0.to_vector() - u0.to_vector()).minCoeff() >= 0.0);
  const SchemeConfig cfg = make_scheme_config(power_cos(3.0), g, {4.0, 0.0}, 1e-8);
  const Evolution u = evolve(power_cos(3.0), kId, u0, 2.0, TimeStepConfig{}, cfg);
  const Evolution w = evolve(power_cos(3.0), kId, w0, 2.0, TimeStepConfig{}, cfg);
  for (std::size_t s = 0; s < u.snapshots.size(); ++s) {
    const double slack = u.tol * u.snapshot_times[s];
    CHECK((u.snapshots[s].to_vector() - w.snapshots[s].to_vector()).maxCoeff() <= slack);
  }
}

TEST_CASE("snapshot schedule") {
  const std::vector<double> s = default_snapshot_times(20.0);
  const std::vector<double> expected{0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1, 2, 5, 10, 20};
  REQUIRE(s.size() == expected.size());
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(s[k] == doctest::Approx(expected[k]));
  CHECK(default_snapshot_times(0.03).back() == 0.03);
  const TorusGrid g = TorusGrid::line(32);
  const SchemeConfig cfg = make_scheme_config(power_cos(2.0), g, {1.0, 0.0}, 1e-8);
  CHECK_THROWS_AS(evolve(power_cos(2.0), kId, ScalarField::constant(g, 0.0), 1.0, {}, cfg, {0.1, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(evolve(power_cos(2.0), kId, ScalarField::constant(g, 0.0), 0.0, {}, cfg),
                  std::invalid_argument);
}

TEST_CASE("extrema of u(t) from zero data are sub- and superadditive") {
  // With u0 = 0 the semigroup property and comparison give
  // max u(t+s) <= max u(t) + max u(s) and min u(t+s) >= min u(t) + min u(s).
  const TorusGrid g = TorusGrid::line(128);
  const SchemeConfig cfg = make_scheme_config(power_cos(2.0), g, {2.0, 0.0}, 1e-8);
  const double delta = 0.25;
  ImexStepper probe(DiscreteOperator(g, power_cos(2.0), kId, cfg));
  const double dt = delta / std::ceil(delta / (0.9 * probe.cfl_limit()));
  std::vector<double> times;
  for (int k = 0; k <= 16; ++k) times.push_back(k * delta);
  const Evolution ev =
      evolve(power_cos(2.0), kId, ScalarField::constant(g, 0.0), 4.0, TimeStepConfig{dt}, cfg, times);
  std::vector<double> mx, mn;
  for (const ScalarField& s : ev.snapshots) {
    mx.push_back(s.to_vector().maxCoeff());
    mn.push_back(s.to_vector().minCoeff());
  }
  const double tol = 1e-12 * 16;
  for (std::size_t a = 1; a < mx.size(); ++a) {
    for (std::size_t b = 1; a + b < mx.size(); ++b) {
      CHECK(mx[a + b] <= mx[a] + mx[b] + tol);
      CHECK(mn[a + b] >= mn[a] + mn[b] - tol);
    }
  }
}

TEST_CASE("regularized and truncated evolutions") {
  const TorusGrid g = TorusGrid::line(128);
  const ScalarField u0 = smooth_start(g, 0.2, 0.3);
  const HamiltonianSpec h = power_cos(3.0);
  const std::array<double, 2> box{4.0, 0.0};
  SchemeConfig cfg = make_scheme_config(h, g, box, 1e-8);
  for (double q : {10.0, 100.0, 1000.0}) {
    cfg = merge_scheme_configs(cfg, make_scheme_config(HamiltonianSpec::regularized(h, q, 4.0), g, box, 1e-8));
  }
  const Evolution ref = evolve(h, kId, u0, 1.0, TimeStepConfig{}, cfg);

  SUBCASE("gap to the reference shrinks with q") {
    const RegularizedEvolution r10 = evolve_regularized(h, kId, u0, 1.0, 10.0, 50.0, 4.0, {}, cfg, ref);
    const RegularizedEvolution r1k = evolve_regularized(h, kId, u0, 1.0, 1000.0, 50.0, 4.0, {}, cfg, ref);
    CHECK(r10.gamma == doctest::Approx(2.0 / 3.0));
    CHECK(r10.sup_gap.front() == 0.0);
    CHECK(r10.sup_gap.back() > 0.0);
    CHECK(r1k.sup_gap.back() <= 0.2 * r10.sup_gap.back());
    CHECK(r10.holder.size() == ref.snapshots.size());
  }
  SUBCASE("truncation above the realised gradients changes nothing") {
    const Evolution trunc = evolve(HamiltonianSpec::truncated(h, 50.0), kId, u0, 1.0, {}, cfg);
    for (std::size_t s = 0; s < ref.snapshots.size(); ++s) {
      CHECK(sup_diff(trunc.snapshots[s], ref.snapshots[s]) == 0.0);
    }
  }
  SUBCASE("constant data: the first step ignores q") {
    const ScalarField flat = ScalarField::constant(g, 1.0);
    const TimeStepConfig t{0.5 / DiscreteOperator(g, h, kId, cfg).hamiltonian_cfl_rate()};
    const ScalarField a = step_imex(flat, HamiltonianSpec::regularized(h, 10.0, 4.0), kId, t, cfg);
    const ScalarField b = step_imex(flat, HamiltonianSpec::regularized(h, 1000.0, 4.0), kId, t, cfg);
    CHECK(sup_diff(a, b) == 0.0);
  }
  CHECK_THROWS_AS(evolve_regularized(h, kId, u0, 1.0, 10.0, 50.0, 2.0, {}, cfg, ref),
                  std::invalid_argument);
}
