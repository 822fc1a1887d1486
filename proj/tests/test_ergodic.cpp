#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "torushj/ergodic_solver.hpp"
#include "torushj/oracles.hpp"
#include "torushj/regularity.hpp"

using namespace torushj;
using namespace testsupport;

namespace {

struct Routes {
  ErgodicSolution direct;
  ErgodicSolution vanishing;
};

Routes both_routes(const HamiltonianSpec& h, const DiffusionSpec& a, const TorusGrid& g) {
  const SchemeConfig cfg = ergodic_scheme_config(h, a, g);
  return {solve_direct(h, a, g, cfg), solve_vanishing_discount(h, a, g, default_eps_schedule(), cfg)};
}

}  // namespace

TEST_CASE("x-independent Hamiltonian") {
  const TorusGrid g = TorusGrid::line(64);
  const Routes r = both_routes(power_const(2.0, 1.0), DiffusionSpec::isotropic(1, 1.0), g);
  for (const ErgodicSolution* s : {&r.direct, &r.vanishing}) {
    CHECK(s->c == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s->v0.sup_norm() <= 1e-8);
  }
}

TEST_CASE("quadratic Hamiltonian against the eigenvalue references") {
  const Mathieu m;
  const DiffusionSpec id = DiffusionSpec::isotropic(1, 1.0);
  double previous = 0.0;
  for (int n : {256, 512}) {
    CAPTURE(n);
    const TorusGrid g = TorusGrid::line(n);
    const Routes r = both_routes(power_cos(2.0), id, g);
    const OracleResult hc = hopf_cole_ergodic(ScalarField::sample(g, cos_x()), 1.0);
    const double err = std::abs(r.direct.c - m.c());
    MESSAGE("n=", n, " direct ", r.direct.c, " vanishing ", r.vanishing.c, " continuum ", m.c(),
            " discrete oracle ", *hc.c);
    CHECK(std::abs(r.direct.c - *hc.c) <= 1e-3);
    CHECK(std::abs(r.vanishing.c - *hc.c) <= 5e-3);
    if (n == 256) CHECK(err <= 1e-3);
    if (n == 512) {
      CHECK(err <= 2.5e-4);
      // First order in h, measured against the continuum eigenvalue.
      CHECK(previous / err >= 1.8);
    }
    previous = err;

    // Profiles: both routes and the continuum ground state.
    const ScalarField exact = ScalarField::sample(g, [&](const Point& x) { return m.v0(x[0]); });
    CHECK(sup_diff(r.direct.v0, exact) <= 20.0 * g.spacing(0));
    CHECK(sup_diff(r.direct.v0, r.vanishing.v0) <= 5e-3);
  }
}

TEST_CASE("routes agree on the cubic Hamiltonian") {
  const TorusGrid g = TorusGrid::line(128);
  const Routes r = both_routes(power_cos(3.0), DiffusionSpec::isotropic(1, 1.0), g);
  MESSAGE("direct ", r.direct.c, " vanishing ", r.vanishing.c);
  CHECK(std::abs(r.direct.c - r.vanishing.c) <= 2e-3);
}

TEST_CASE("route agreement across the catalog") {
  for (const CatalogEntry& e : catalog(64, 16)) {
    CAPTURE(e.name);
    const Routes r = both_routes(e.h, e.a, e.grid);
    double h = e.grid.spacing(0);
    if (e.grid.dim() == 2) h = std::max(h, e.grid.spacing(1));
    CHECK(std::abs(r.direct.c - r.vanishing.c) <= std::max(1e-3, 5.0 * h));
  }
}

TEST_CASE("anchor, residual and the constant shift") {
  const TorusGrid g = TorusGrid::line(128);
  const DiffusionSpec id = DiffusionSpec::isotropic(1, 1.0);
  const SchemeConfig cfg = ergodic_scheme_config(power_cos(2.0), id, g);
  const ErgodicSolution base = solve_direct(power_cos(2.0), id, g, cfg);
  CHECK(base.v0[0] == 0.0);
  const DiscreteOperator op(g, power_cos(2.0), id, base.scheme);
  CHECK(ergodic_residual(op, base.v0, base.c) <= base.scheme.tol_residual);
  CHECK(base.residual_sup <= base.scheme.tol_residual);
  CHECK(!base.convergence_table.empty());

  const HamiltonianSpec shifted = HamiltonianSpec::offset(power_cos(2.0), 5.0);
  const ErgodicSolution s = solve_direct(shifted, id, g, cfg);
  CHECK(s.c == doctest::Approx(base.c + 5.0).epsilon(1e-9));
  CHECK(sup_diff(s.v0, base.v0) <= 1e-7);

  const ErgodicSolution vd = solve_vanishing_discount(power_cos(2.0), id, g, default_eps_schedule(), cfg);
  CHECK(vd.v0[0] == 0.0);
  REQUIRE(vd.convergence_table.size() == default_eps_schedule().size());
  for (std::size_t k = 1; k < vd.convergence_table.size(); ++k) {
    CHECK(vd.convergence_table[k].eps < vd.convergence_table[k - 1].eps);
  }
}

TEST_CASE("ergodic profile is no rougher than the discounted solutions") {
  const TorusGrid g = TorusGrid::line(128);
  const DiffusionSpec id = DiffusionSpec::isotropic(1, 1.0);
  double ceiling = 0.0;
  for (double eps : {1.0, 0.1, 0.01, 1e-3}) {
    ceiling = std::max(ceiling, lipschitz_seminorm(
                                    solve_discounted_adaptive(power_cos(2.0), id, g, eps).solution));
  }
  const ErgodicSolution d = solve_direct(power_cos(2.0), id, g, ergodic_scheme_config(power_cos(2.0), id, g));
  CHECK(lipschitz_seminorm(d.v0) <= 1.1 * ceiling);
}

TEST_CASE("schedule validation") {
  const TorusGrid g = TorusGrid::line(32);
  const DiffusionSpec id = DiffusionSpec::isotropic(1, 1.0);
  const SchemeConfig cfg = make_scheme_config(power_cos(2.0), g, {1.0, 0.0}, 1e-8);
  CHECK_THROWS_AS(solve_vanishing_discount(power_cos(2.0), id, g, {0.1, 1.0}, cfg),
                  std::invalid_argument);
  const auto s = default_eps_schedule();
  CHECK(s.front() == 1.0);
  for (std::size_t k = 1; k < s.size(); ++k) CHECK(s[k] < s[k - 1]);
}
