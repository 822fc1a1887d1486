#include "torushj/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "torushj/errors.hpp"

namespace torushj {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLCap = 1e6;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double spectral_min(const Eigen::Matrix2d& a, int dim) {
  if (dim == 1) return a(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double operator_norm(const Eigen::Matrix2d& m, int dim) {
  if (dim == 1) return std::abs(m(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m.transpose() * m,
                                                     Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Eigen::Matrix2d restrict_dim(Eigen::Matrix2d m, int dim) {
  if (dim == 1) {
    m(0, 1) = m(1, 0) = m(1, 1) = 0.0;
  }
  return m;
}

}  // namespace

double FourierSeries::operator()(const Point& x) const {
  double sum = 0.0;
  for (const FourierTerm& t : terms_) {
    const double phase = kTwoPi * (t.freq[0] * x[0] + t.freq[1] * x[1]);
    if (t.cos_coeff != 0.0) sum += t.cos_coeff * std::cos(phase);
    if (t.sin_coeff != 0.0) sum += t.sin_coeff * std::sin(phase);
  }
  return sum;
}

ScalarCoefficient constant_coefficient(double c) {
  return [c](const Point&) { return c; };
}

ScalarCoefficient fourier_coefficient(FourierSeries series) {
  return [s = std::move(series)](const Point& x) { return s(x); };
}

ScalarCoefficient field_coefficient(ScalarField field) {
  return [f = std::move(field)](const Point& x) {
    const TorusGrid& g = f.grid();
    MultiIndex i{static_cast<int>(std::lround(x[0] * g.count(0))),
                 g.dim() == 2 ? static_cast<int>(std::lround(x[1] * g.count(1))) : 0};
    return f.at(i);
  };
}

// ---------------------------------------------------------------------------
// DiffusionSpec

DiffusionSpec DiffusionSpec::isotropic(int dim, double nu) {
  if (nu < 0.0) throw std::invalid_argument("DiffusionSpec: nu must be >= 0");
  DiffusionSpec d;
  d.dim_ = dim;
  const double s = std::sqrt(nu);
  d.sigma_ = [s, dim](const Point&) {
    return restrict_dim(Eigen::Matrix2d::Identity() * s, dim);
  };
  d.nu_ = nu;
  d.sigma_sup_ = s;
  d.sigma_lip_ = 0.0;
  d.a_sup_ = nu;
  return d;
}

DiffusionSpec DiffusionSpec::zero(int dim) { return isotropic(dim, 0.0); }

DiffusionSpec DiffusionSpec::from_sigma(int dim, MatrixCoefficient sigma,
                                        const TorusGrid& sample_grid) {
  if (sample_grid.dim() != dim) {
    throw std::invalid_argument("DiffusionSpec: grid dimension mismatch");
  }
  DiffusionSpec d;
  d.dim_ = dim;
  d.sigma_ = [s = std::move(sigma), dim](const Point& x) {
    return restrict_dim(s(x), dim);
  };
  d.measure(sample_grid);
  return d;
}

DiffusionSpec DiffusionSpec::with_added_identity(double s,
                                                 const TorusGrid& sample_grid) const {
  DiffusionSpec d;
  d.dim_ = dim_;
  d.sigma_ = [base = sigma_, s, dim = dim_](const Point& x) {
    const Eigen::Matrix2d b = base(x);
    Eigen::Matrix2d a = b * b.transpose();
    if (dim == 1) {
      Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
      out(0, 0) = std::sqrt(a(0, 0) + s);
      return out;
    }
    a += s * Eigen::Matrix2d::Identity();
    return Eigen::Matrix2d(a.llt().matrixL());
  };
  d.measure(sample_grid);
  return d;
}

Eigen::Matrix2d DiffusionSpec::sigma(const Point& x) const { return sigma_(x); }

Eigen::Matrix2d DiffusionSpec::a(const Point& x) const {
  const Eigen::Matrix2d s = sigma_(x);
  return restrict_dim(s * s.transpose(), dim_);
}

void DiffusionSpec::measure(const TorusGrid& grid) {
  nu_ = std::numeric_limits<double>::infinity();
  sigma_sup_ = 0.0;
  sigma_lip_ = 0.0;
  a_sup_ = 0.0;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Point x = grid.point(n);
    const Eigen::Matrix2d s = sigma_(x);
    const Eigen::Matrix2d a = restrict_dim(s * s.transpose(), dim_);
    nu_ = std::min(nu_, spectral_min(a, dim_));
    sigma_sup_ = std::max(sigma_sup_, operator_norm(s, dim_));
    a_sup_ = std::max(a_sup_, dim_ == 1 ? a(0, 0) : std::max(a(0, 0), a(1, 1)));
    for (int k = 0; k < dim_; ++k) {
      const Point y = grid.point(grid.shift(n, k, 1));
      const double q = operator_norm(sigma_(y) - s, dim_) / grid.spacing(k);
      sigma_lip_ = std::max(sigma_lip_, q);
    }
  }
  nu_ = std::max(nu_, 0.0);
}

void DiffusionSpec::check_admissible(const TorusGrid& grid, double tol) const {
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Point x = grid.point(n);
    const Eigen::Matrix2d s = sigma_(x);
    const Eigen::Matrix2d a = restrict_dim(s * s.transpose(), dim_);
    if (spectral_min(a, dim_) < nu_ - tol) {
      throw std::invalid_argument("DiffusionSpec: ellipticity bound violated at a node");
    }
    if (operator_norm(s, dim_) > sigma_sup_ + tol) {
      throw std::invalid_argument("DiffusionSpec: |sigma|_inf underestimated");
    }
    for (int k = 0; k < dim_; ++k) {
      const Point y = grid.point(grid.shift(n, k, 1));
      if (operator_norm(sigma_(y) - s, dim_) / grid.spacing(k) > sigma_lip_ + tol) {
        throw std::invalid_argument("DiffusionSpec: |sigma_x|_inf underestimated");
      }
    }
  }
}

double ctilde(int n, double nu, double sigma_sup, double sigma_lip) {
  const double t = 1.0 + 2.0 * sigma_sup * sigma_sup / nu;
  return sigma_lip * sigma_lip * (n - 2 + t * t);
}

// ---------------------------------------------------------------------------
// HamiltonianSpec

HamiltonianSpec HamiltonianSpec::power_coercive(ScalarCoefficient a, double k,
                                                ScalarCoefficient ell) {
  HamiltonianMetadata meta;
  meta.k = k;
  meta.growth_M = k;
  return HamiltonianSpec(PowerCoercive{std::move(a), k, std::move(ell)}, meta);
}

HamiltonianSpec HamiltonianSpec::sigma_power(MatrixCoefficient sigma, double m,
                                             std::optional<HamiltonianSpec> g) {
  HamiltonianPtr gp;
  if (g) gp = std::make_shared<const HamiltonianSpec>(std::move(*g));
  HamiltonianMetadata meta;
  meta.growth_M = m;
  return HamiltonianSpec(SigmaPower{std::move(sigma), m, std::move(gp)}, meta);
}

HamiltonianSpec HamiltonianSpec::sublinear(VectorCoefficient b, ScalarCoefficient ell) {
  HamiltonianMetadata meta;
  meta.growth_M = 1.0;
  return HamiltonianSpec(Sublinear{std::move(b), std::move(ell)}, meta);
}

HamiltonianSpec HamiltonianSpec::perturbed_power(const HamiltonianSpec& k_part,
                                                 double alpha_coef, double exponent) {
  HamiltonianMetadata meta = k_part.metadata();
  meta.growth_M = exponent;
  return HamiltonianSpec(
      PerturbedPower{std::make_shared<const HamiltonianSpec>(k_part), alpha_coef,
                     exponent},
      meta);
}

HamiltonianSpec HamiltonianSpec::truncated(const HamiltonianSpec& inner, double n_trunc) {
  if (!(n_trunc > 0.0)) throw std::invalid_argument("truncation level must be > 0");
  return HamiltonianSpec(
      Truncated{std::make_shared<const HamiltonianSpec>(inner), n_trunc},
      inner.metadata());
}

HamiltonianSpec HamiltonianSpec::regularized(const HamiltonianSpec& inner, double q,
                                             double m) {
  if (!(q > 0.0)) throw std::invalid_argument("regularization q must be > 0");
  HamiltonianMetadata meta = inner.metadata();
  meta.k = m;
  meta.growth_M = m;
  return HamiltonianSpec(
      Regularized{std::make_shared<const HamiltonianSpec>(inner), q, m}, meta);
}

HamiltonianSpec HamiltonianSpec::offset(const HamiltonianSpec& inner, double value) {
  return HamiltonianSpec(Offset{std::make_shared<const HamiltonianSpec>(inner), value},
                         inner.metadata());
}

HamiltonianSpec HamiltonianSpec::custom(
    std::function<double(const Point&, const VectorSample&)> eval, std::string name) {
  return HamiltonianSpec(Custom{std::move(eval), std::move(name)});
}

double HamiltonianSpec::operator()(const Point& x, const VectorSample& p) const {
  return std::visit(
      Overloaded{
          [&](const PowerCoercive& f) {
            return f.a(x) * std::pow(p.norm(), f.k) + f.ell(x);
          },
          [&](const SigmaPower& f) {
            const double base = std::pow((f.sigma(x) * p).norm(), f.m);
            return f.g ? base + (*f.g)(x, p) : base;
          },
          [&](const Sublinear& f) { return f.b(x).dot(p) + f.ell(x); },
          [&](const PerturbedPower& f) {
            return (*f.k_part)(x, p) + f.alpha_coef * std::pow(p.norm(), f.exponent);
          },
          [&](const Truncated& f) {
            const double r = p.norm();
            if (r <= f.n_trunc) return (*f.inner)(x, p);
            const VectorSample clipped = p * (f.n_trunc / r);
            return (*f.inner)(x, clipped);
          },
          [&](const Regularized& f) {
            return std::pow(p.norm(), f.m) / f.q + (*f.inner)(x, p);
          },
          [&](const Offset& f) { return (*f.inner)(x, p) + f.value; },
          [&](const Custom& f) { return f.eval(x, p); },
      },
      family_);
}

HamiltonianSpec HamiltonianSpec::with_metadata(HamiltonianMetadata meta) const {
  HamiltonianSpec out = *this;
  out.meta_ = meta;
  return out;
}

std::string HamiltonianSpec::tag() const {
  return std::visit(
      Overloaded{
          [](const PowerCoercive&) { return std::string("power_coercive"); },
          [](const SigmaPower&) { return std::string("sigma_power"); },
          [](const Sublinear&) { return std::string("sublinear"); },
          [](const PerturbedPower&) { return std::string("perturbed_power"); },
          [](const Truncated& f) { return "truncated(" + f.inner->tag() + ")"; },
          [](const Regularized& f) { return "regularized(" + f.inner->tag() + ")"; },
          [](const Offset& f) { return "offset(" + f.inner->tag() + ")"; },
          [](const Custom& f) { return f.name; },
      },
      family_);
}

double eval_H(const HamiltonianSpec& spec, const Point& x, const VectorSample& p) {
  return spec(x, p);
}

// ---------------------------------------------------------------------------
// Assumption checks

double sup_abs_H0(const HamiltonianSpec& spec, std::span<const Point> xs) {
  double s = 0.0;
  const VectorSample zero = VectorSample::Zero();
  for (const Point& x : xs) s = std::max(s, std::abs(spec(x, zero)));
  return s;
}

std::vector<VectorSample> unit_directions(int dim, int count) {
  if (dim == 1) return {VectorSample(1.0, 0.0), VectorSample(-1.0, 0.0)};
  std::vector<VectorSample> out;
  out.reserve(count);
  for (int j = 0; j < count; ++j) {
    const double a = kTwoPi * j / count;
    out.emplace_back(std::cos(a), std::sin(a));
  }
  return out;
}

std::vector<Point> grid_points(const TorusGrid& grid, int stride) {
  std::vector<Point> out;
  for (int i = 0; i < grid.count(0); i += stride) {
    if (grid.dim() == 1) {
      out.push_back(grid.point(grid.flat({i, 0})));
      continue;
    }
    for (int j = 0; j < grid.count(1); j += stride) {
      out.push_back(grid.point(grid.flat({i, j})));
    }
  }
  return out;
}

double estimate_ssa4_L(const HamiltonianSpec& spec, const DiffusionSpec& diff,
                       std::span<const Point> xs,
                       std::span<const VectorSample> directions, double tol,
                       std::optional<double> forcing) {
  if (xs.empty() || directions.empty()) {
    throw std::invalid_argument("estimate_ssa4_L: empty sample set");
  }
  const int dim = diff.dim();
  const double force = forcing ? *forcing : sup_abs_H0(spec, xs);
  const double coupling = dim * diff.sigma_lip() * diff.sigma_lip();

  // R(x, e) = max_y [H(y, e) + N |x - y| |sigma_x|^2] does not depend on L.
  const std::size_t nx = xs.size();
  const std::size_t nd = directions.size();
  std::vector<double> h_unit(nx * nd);
  for (std::size_t y = 0; y < nx; ++y) {
    for (std::size_t e = 0; e < nd; ++e) h_unit[y * nd + e] = spec(xs[y], directions[e]);
  }
  std::vector<double> rhs(nx * nd, -std::numeric_limits<double>::infinity());
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t e = 0; e < nd; ++e) {
      double best = -std::numeric_limits<double>::infinity();
      if (coupling == 0.0) {
        for (std::size_t y = 0; y < nx; ++y) best = std::max(best, h_unit[y * nd + e]);
      } else {
        for (std::size_t y = 0; y < nx; ++y) {
          best = std::max(best, h_unit[y * nd + e] +
                                    coupling * torus_distance(xs[x], xs[y], dim));
        }
      }
      rhs[x * nd + e] = best + force;
    }
    if (coupling == 0.0 && x == 0) {
      for (std::size_t x2 = 1; x2 < nx; ++x2) {
        std::copy(rhs.begin(), rhs.begin() + nd, rhs.begin() + x2 * nd);
      }
      break;
    }
  }

  auto holds = [&](double L) {
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t e = 0; e < nd; ++e) {
        const VectorSample p = directions[e] * L;
        if (spec(xs[x], p) < L * rhs[x * nd + e]) return false;
      }
    }
    return true;
  };

  double lo = 1.0 + tol;
  if (holds(lo)) return lo;
  double hi = 2.0 * lo;
  while (!holds(hi)) {
    lo = hi;
    if (hi >= kLCap) {
      std::ostringstream msg;
      msg << "growth condition fails for every L up to " << kLCap;
      throw NoFiniteL(msg.str());
    }
    hi = std::min(2.0 * hi, kLCap);
  }
  while (hi - lo > tol * lo) {
    const double mid = 0.5 * (lo + hi);
    if (holds(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

CoercivityCheck check_coercivity(const HamiltonianSpec& spec, double k, double C,
                                 std::span<const Point> xs,
                                 std::span<const VectorSample> ps) {
  CoercivityCheck out;
  out.k = k;
  out.C = C;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (const Point& x : xs) {
    for (const VectorSample& p : ps) {
      const double margin = spec(x, p) - (std::pow(p.norm(), k) / C - C);
      if (margin < out.worst_margin) {
        out.worst_margin = margin;
        out.worst_x = x;
        out.worst_p = p;
      }
    }
  }
  out.ok = out.worst_margin >= 0.0;
  return out;
}

CoercivityCheck check_coercivity(const HamiltonianSpec& spec, double radius,
                                 std::span<const Point> xs, int dim) {
  const auto& meta = spec.metadata();
  if (!meta.k || !meta.C) {
    throw std::invalid_argument("check_coercivity: spec declares no (k, C)");
  }
  std::vector<VectorSample> ps;
  constexpr int kRadii = 401;
  for (const VectorSample& e : unit_directions(dim, 32)) {
    for (int j = 0; j < kRadii; ++j) ps.push_back(e * (radius * j / (kRadii - 1)));
  }
  return check_coercivity(spec, *meta.k, *meta.C, xs, ps);
}

StructureDefect structure_defect_LN2(const HamiltonianSpec& spec, const Point& x,
                                     const Point& y, const VectorSample& p, int dim) {
  const auto& meta = spec.metadata();
  const double k = meta.k.value_or(2.0);
  const double alpha = meta.alpha.value_or(1.0);
  const double beta = meta.beta.value_or(0.0);
  StructureDefect d;
  const double r = p.norm();
  d.h_diff = std::abs(spec(x, p) - spec(y, p));
  d.distance = torus_distance(x, y, dim);
  d.modulus_arg = (1.0 + std::pow(r, beta)) * d.distance;
  d.growth_term = std::pow(d.distance, alpha) * std::pow(r, (k - 1.0) * alpha + k);
  d.ln1_growth = std::pow(d.distance, alpha) * std::pow(r, alpha + 2.0);
  d.ln1_affine = 1.0 + r * r;
  return d;
}

AssumptionEstimates estimate_assumptions(const HamiltonianSpec& spec,
                                         const DiffusionSpec& diff,
                                         const TorusGrid& grid, double p_radius,
                                         double tol) {
  AssumptionEstimates out;
  const int stride =
      grid.dim() == 1 ? 1 : std::max(1, std::max(grid.count(0), grid.count(1)) / 16);
  const std::vector<Point> xs = grid_points(grid, stride);
  const std::vector<VectorSample> dirs = unit_directions(grid.dim());
  out.H0_sup = sup_abs_H0(spec, grid_points(grid));
  try {
    out.L_ssa4 = estimate_ssa4_L(spec, diff, xs, dirs, tol);
  } catch (const NoFiniteL&) {
    out.L_ssa4.reset();
  }
  if (spec.metadata().k && spec.metadata().C) {
    out.coercivity = check_coercivity(spec, p_radius, xs, grid.dim());
  }
  const std::size_t step = std::max<std::size_t>(1, xs.size() / 16);
  for (std::size_t i = 0; i < xs.size(); i += step) {
    for (std::size_t j = i + step; j < xs.size(); j += step) {
      for (int r = 1; r <= 8; ++r) {
        const VectorSample p = dirs.front() * (p_radius * r / 8.0);
        const StructureDefect d = structure_defect_LN2(spec, xs[i], xs[j], p, grid.dim());
        if (d.growth_term > 0.0) {
          out.modulus_samples.push_back({d.modulus_arg, d.h_diff / d.growth_term});
        }
      }
    }
  }
  return out;
}

}  // namespace torushj
