#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "torushj/errors.hpp"
#include "torushj/regularity.hpp"
#include "torushj/stationary_solver.hpp"

using namespace torushj;
using namespace testsupport;

namespace {

double brute_osc(const ScalarField& v) {
  double best = 0.0;
  for_all_pairs(v.grid(), [&](std::size_t i, std::size_t j, double) { best = std::max(best, v[i] - v[j]); });
  return best;
}

double brute_M(const ScalarField& v, const CertificateParams& p) {
  double best = -std::numeric_limits<double>::infinity();
  for_all_pairs(v.grid(), [&](std::size_t i, std::size_t j, double d) {
    best = std::max(best, v[i] - v[j] - p.psi(d));
  });
  return best;
}

ScalarField tent(const TorusGrid& g, double slope) {
  return ScalarField::sample(g, [&](const Point& x) { return slope * std::min(x[0], 1.0 - x[0]); });
}

std::vector<ScalarField> computed_fields() {
  std::vector<ScalarField> out;
  for (const CatalogEntry& e : catalog(64, 12)) {
    out.push_back(solve_discounted_adaptive(e.h, e.a, e.grid, 0.1).solution);
  }
  return out;
}

}  // namespace

TEST_CASE("oscillation") {
  const TorusGrid g = TorusGrid::line(200);
  CHECK(oscillation(ScalarField::constant(g, 3.0)) == 0.0);
  const ScalarField c = ScalarField::sample(g, [](const Point& x) { return std::cos(kTwoPi * x[0]); });
  CHECK(std::abs(oscillation(c) - 2.0) <= 2.0 * std::pow(kTwoPi / 200.0, 2));
  for (const TorusGrid& gg : {TorusGrid::line(40), TorusGrid::square(10, 12)}) {
    const ScalarField r = random_field(gg, 9);
    CHECK(oscillation(r) == brute_osc(r));
  }
}

TEST_CASE("Lipschitz seminorm") {
  const TorusGrid g = TorusGrid::line(64);
  CHECK(lipschitz_seminorm(ScalarField::constant(g, -1.0)) == 0.0);
  CHECK(lipschitz_seminorm(tent(g, 2.0)) == doctest::Approx(2.0));
  // On a 1D torus the geodesic splits into neighbour steps, so the
  // neighbour maximum is the all-pairs maximum.
  const ScalarField r = random_field(g, 21);
  CHECK(lipschitz_seminorm(r) == doctest::Approx(brute_holder(r, 1.0)).epsilon(1e-12));
}

TEST_CASE("Hoelder seminorm") {
  const TorusGrid g = TorusGrid::line(64);
  CHECK(holder_seminorm(ScalarField::constant(g, 1.0), 0.5) == 0.0);
  const ScalarField r = random_field(g, 4);
  CHECK(holder_seminorm(r, 1.0) == doctest::Approx(lipschitz_seminorm(r)).epsilon(1e-12));
  for (double gamma : {0.25, 0.5, 0.75}) {
    CHECK(holder_seminorm(r, gamma) == doctest::Approx(brute_holder(r, gamma)).epsilon(1e-12));
  }
  const TorusGrid sq = TorusGrid::square(12, 10);
  const ScalarField r2 = random_field(sq, 5);
  CHECK(holder_seminorm(r2, 0.5) == doctest::Approx(brute_holder(r2, 0.5)).epsilon(1e-12));

  SUBCASE("square-root cusp") {
    const TorusGrid fine = TorusGrid::line(512);
    const ScalarField cusp =
        ScalarField::sample(fine, [](const Point& x) { return std::sqrt(std::abs(x[0] - 0.5)); });
    CHECK(std::abs(holder_seminorm(cusp, 0.5) - 1.0) <= 0.05);
  }
}

TEST_CASE("Hoelder seminorm grows with the exponent when distances stay below one") {
  // d^gamma decreases in gamma for d < 1, so each ratio increases.
  std::vector<ScalarField> fields = computed_fields();
  fields.push_back(random_field(TorusGrid::line(50), 1));
  fields.push_back(random_field(TorusGrid::square(10, 10), 2));
  for (const ScalarField& f : fields) {
    double previous = 0.0;
    for (double gamma : {0.1, 0.25, 0.5, 0.75, 1.0}) {
      const double s = holder_seminorm(f, gamma);
      CHECK(s >= previous * (1.0 - 1e-12));
      previous = s;
    }
  }
}

TEST_CASE("doubling certificate examples") {
  const TorusGrid g = TorusGrid::line(64);
  const ScalarField r = random_field(g, 8, 0.3);
  const double lip = lipschitz_seminorm(r);
  CHECK(doubling_certificate(r, CertificateParams::holder_power(1.001 * lip, 1.0)).M <= 0.0);
  CHECK(doubling_certificate(r, CertificateParams::holder_power(0.999 * lip, 1.0)).M > 0.0);

  const CertificateResult res = doubling_certificate(r, CertificateParams::holder_power(lip, 0.5));
  CHECK(res.slack == doctest::Approx(2.0 * lip * g.spacing(0)));
  CHECK(res.certified == (res.M + res.slack <= 0.0));
  CHECK(res.exhaustive);
  CHECK(r[res.argmax.x] - r[res.argmax.y] -
            lip * std::sqrt(torus_distance(g.point(res.argmax.x), g.point(res.argmax.y), 1)) ==
        doctest::Approx(res.M));

  // The concave certificate against a scan in the opposite order.
  for (const ScalarField& f : computed_fields()) {
    const CertificateParams p = CertificateParams::concave_lip(oscillation(f), 0.5, 2.0);
    CHECK(doubling_certificate(f, p).M == doctest::Approx(brute_M(f, p)).epsilon(1e-14));
  }
}

TEST_CASE("concave certificate shape") {
  for (double gamma : {0.25, 0.5, 0.9}) {
    const CertificateParams p = CertificateParams::concave_lip(1.5, gamma, 4.0);
    CHECK(p.A2 * p.r == doctest::Approx(1.0 / 3.0));
    CHECK(p.psi(p.r) == doctest::Approx(2.5));
    CHECK(p.psi(2.0 * p.r) == p.psi(p.r));
    double previous = 0.0, previous_slope = std::numeric_limits<double>::infinity();
    const int steps = 200;
    for (int k = 1; k <= steps; ++k) {
      const double s = p.r * k / steps;
      const double v = p.psi(s);
      const double slope = (v - previous) / (p.r / steps);
      CHECK(v > previous);
      CHECK(slope <= previous_slope + 1e-9);
      previous = v;
      previous_slope = slope;
    }
  }
}

TEST_CASE("certificate tightness on computed fields") {
  for (const ScalarField& f : computed_fields()) {
    if (oscillation(f) == 0.0) continue;
    for (double gamma : {0.5, 1.0}) {
      const double s = holder_seminorm(f, gamma);
      CHECK(doubling_certificate(f, CertificateParams::holder_power(s, gamma)).M <= 0.0);
      CHECK(doubling_certificate(f, CertificateParams::holder_power((1.0 - 1e-6) * s, gamma)).M > 0.0);
    }
  }
}

TEST_CASE("minimal concave certificate") {
  const TorusGrid g = TorusGrid::line(128);
  CHECK(minimal_certificate_A2(ScalarField::constant(g, 2.0), 0.5) == doctest::Approx(1.0 / 3.0));

  const ScalarField saw = tent(g, 2.0);
  const double gamma = 0.5;
  const double a2 = minimal_certificate_A2(saw, gamma);
  const CertificateParams p = CertificateParams::concave_lip(oscillation(saw), gamma, a2);
  const double constant = p.A1 * p.A2;
  // Psi'(0) = A1 A2 must reach the slope; the concavity correction costs at
  // most a factor 1 / (1 - 3^-gamma), plus the 1% bisection tolerance.
  CHECK(constant >= 2.0 * (1.0 - 1e-9));
  CHECK(constant <= 2.0 / (1.0 - std::pow(3.0, -gamma)) * 1.01);
  CHECK(doubling_certificate(saw, p).M <= 0.0);
}

TEST_CASE("minimal A2 against the exponent on computed fields") {
  // Not a claimed property; the measurement records whether it holds here.
  int exceptions = 0;
  for (const ScalarField& f : computed_fields()) {
    if (oscillation(f) == 0.0) continue;
    double previous = std::numeric_limits<double>::infinity();
    for (double gamma : {0.25, 0.5, 0.75, 0.9}) {
      const double a2 = minimal_certificate_A2(f, gamma);
      if (a2 > previous * 1.02) ++exceptions;
      previous = a2;
    }
  }
  MESSAGE("fields where minimal A2 rises with gamma: ", exceptions);
  CHECK(exceptions == 0);
}

TEST_CASE("cone bound around the minimum") {
  const TorusGrid g = TorusGrid::line(64);
  CHECK(cone_bound_check(ScalarField::constant(g, 1.0), 0.5).worst_defect <= 0.0);
  const ScalarField v = ScalarField::sample(g, [](const Point& x) { return std::abs(x[0] - 0.5); });
  const ConeCheck c = cone_bound_check(v, 1.0);
  CHECK(c.argmin == 32);
  CHECK(std::abs(c.worst_defect) <= 1e-12);
  CHECK(cone_bound_check(v, 0.9).worst_defect > 0.0);
}

TEST_CASE("capped pair scans") {
  const TorusGrid g = TorusGrid::line(128);
  CHECK(pair_count(g) == 128 * 127 / 2);
  CHECK(pair_count(TorusGrid::square(10, 10)) == 100 * 99 / 2);
  const ScalarField r = random_field(g, 12);
  const PairScanOptions capped{1000, 99};
  const double a = holder_seminorm(r, 0.5, capped);
  CHECK(a == holder_seminorm(r, 0.5, capped));
  CHECK(a <= holder_seminorm(r, 0.5));
  CHECK(a >= lipschitz_seminorm(r) * std::sqrt(g.spacing(0)) * (1.0 - 1e-12));
  CHECK(holder_seminorm(r, 1.0, capped) == doctest::Approx(lipschitz_seminorm(r)));
  const CertificateResult c = doubling_certificate(r, CertificateParams::holder_power(1.0, 0.5), capped);
  CHECK(!c.exhaustive);
  CHECK(c.M == doubling_certificate(r, CertificateParams::holder_power(1.0, 0.5), capped).M);
}

TEST_CASE("analysis bundle") {
  const TorusGrid g = TorusGrid::line(64);
  const ScalarField v = tent(g, 2.0);
  const RegularityReport rep = analyze(v, {0.5, 1.0}, 0.5, 2.0);
  CHECK(rep.osc == doctest::Approx(1.0));
  CHECK(rep.lip == doctest::Approx(2.0));
  CHECK(rep.holder.at(1.0) == doctest::Approx(2.0));
  REQUIRE(rep.certified_constant);
  CHECK(*rep.certified_constant >= 2.0 * (1.0 - 1e-9));
  REQUIRE(rep.cone);
  CHECK(rep.cone->worst_defect <= 1e-12);
  const RegularityReport bare = analyze(v, {0.5});
  CHECK(!bare.certificate);
  CHECK(!bare.cone);
}
