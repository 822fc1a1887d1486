#pragma once

// Shared problem builders and independent reference computations for the
// test binaries. Nothing here calls the routine it is used to check.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "torushj/problem.hpp"
#include "torushj/torus_grid.hpp"

namespace testsupport {

using namespace torushj;

inline constexpr double kTwoPi = 6.283185307179586;

inline ScalarCoefficient cos_x() {
  return fourier_coefficient(FourierSeries({FourierTerm{{1, 0}, 1.0, 0.0}}));
}

/// a |p|^k + cos(2 pi x)
inline HamiltonianSpec power_cos(double k, double a = 1.0) {
  return HamiltonianSpec::power_coercive(constant_coefficient(a), k, cos_x());
}

/// |p|^k + value, x-independent.
inline HamiltonianSpec power_const(double k, double value) {
  return HamiltonianSpec::power_coercive(constant_coefficient(1.0), k,
                                         constant_coefficient(value));
}

/// Continuum ground state of -phi'' - cos(2 pi x) phi = lambda phi on the
/// unit circle by a Fourier-Galerkin eigen solve with modes |k| <= K.
struct Mathieu {
  double lambda = 0.0;
  Eigen::VectorXd coeffs;  ///< indexed k + K
  int K = 0;

  explicit Mathieu(int modes = 48) : K(modes) {
    const int n = 2 * K + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const double k = i - K;
      m(i, i) = kTwoPi * kTwoPi * k * k;
      if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = -0.5;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    lambda = es.eigenvalues()[0];
    coeffs = es.eigenvectors().col(0);
    if (coeffs[K] < 0.0) coeffs = -coeffs;
  }
  /// Ergodic constant of H = |p|^2 + cos(2 pi x), A = I.
  double c() const { return -lambda; }
  double phi(double x) const {
    double s = coeffs[K];
    for (int k = 1; k <= K; ++k) s += 2.0 * coeffs[K + k] * std::cos(kTwoPi * k * x);
    return s;
  }
  /// v0(x) = -log(phi(x) / phi(0)).
  double v0(double x) const { return -std::log(phi(x) / phi(0.0)); }
};

struct CatalogEntry {
  std::string name;
  HamiltonianSpec h;
  DiffusionSpec a;
  TorusGrid grid;
};

/// The problems the solver-level properties are checked on.
inline std::vector<CatalogEntry> catalog(int n1 = 128, int n2 = 24) {
  const TorusGrid line = TorusGrid::line(n1);
  const TorusGrid sq = TorusGrid::square(n2, n2);
  const FourierSeries wave({FourierTerm{{1, 0}, 0.5, 0.0}, FourierTerm{{0, 1}, 0.0, 0.5}});
  const auto sigma = [](const Point& x) {
    Eigen::Matrix2d s;
    s << 1.0, 0.0, 0.3 * std::sin(kTwoPi * x[0]), 0.9;
    return s;
  };
  std::vector<CatalogEntry> out;
  out.push_back({"quadratic_cos", power_cos(2.0), DiffusionSpec::isotropic(1, 1.0), line});
  out.push_back({"cubic_cos", power_cos(3.0), DiffusionSpec::isotropic(1, 1.0), line});
  out.push_back({"weighted_quadratic",
                 HamiltonianSpec::power_coercive(
                     fourier_coefficient(FourierSeries({FourierTerm{{0, 0}, 1.0, 0.0},
                                                        FourierTerm{{1, 0}, 0.0, 0.3}})),
                     2.0, cos_x()),
                 DiffusionSpec::isotropic(1, 0.5), line});
  out.push_back({"sublinear",
                 HamiltonianSpec::sublinear(
                     [](const Point& x) { return Eigen::Vector2d(std::sin(kTwoPi * x[0]), 0.0); },
                     cos_x()),
                 DiffusionSpec::isotropic(1, 1.0), line});
  out.push_back({"perturbed_quadratic",
                 HamiltonianSpec::perturbed_power(power_cos(2.0), 0.5, 1.5),
                 DiffusionSpec::isotropic(1, 1.0), line});
  out.push_back({"anisotropic_2d",
                 HamiltonianSpec::power_coercive(constant_coefficient(1.0), 2.0,
                                                 fourier_coefficient(wave)),
                 DiffusionSpec::from_sigma(2, sigma, sq), sq});
  out.push_back({"sigma_power_2d",
                 HamiltonianSpec::sigma_power(
                     [](const Point&) {
                       return Eigen::Matrix2d(Eigen::Vector2d(1.0, 0.7).asDiagonal());
                     },
                     2.0,
                     HamiltonianSpec::sublinear([](const Point&) { return Eigen::Vector2d(0.0, 0.0); },
                                                fourier_coefficient(wave))),
                 DiffusionSpec::isotropic(2, 0.5), sq});
  return out;
}

inline ScalarField random_field(const TorusGrid& g, std::uint64_t seed, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<double> v(g.size());
  for (double& x : v) x = u(rng);
  return ScalarField(g, std::move(v));
}

/// Every pair of distinct nodes, distance from raw coordinates.
template <class F>
void for_all_pairs(const TorusGrid& g, F&& f) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (i != j) f(i, j, torus_distance(g.point(i), g.point(j), g.dim()));
    }
  }
}

inline double brute_holder(const ScalarField& v, double gamma) {
  double best = 0.0;
  for_all_pairs(v.grid(), [&](std::size_t i, std::size_t j, double d) {
    best = std::max(best, std::abs(v[i] - v[j]) / std::pow(d, gamma));
  });
  return best;
}

inline double sup_diff(const ScalarField& a, const ScalarField& b) {
  return (a.to_vector() - b.to_vector()).lpNorm<Eigen::Infinity>();
}

}  // namespace testsupport
