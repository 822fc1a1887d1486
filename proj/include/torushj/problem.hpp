#pragma once

// Catalog of diffusions and Hamiltonians, plus sampled versions of the
// structural assumptions the regularity theory relies on.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "torushj/torus_grid.hpp"

namespace torushj {

/// One term c*cos(2 pi k.x) + s*sin(2 pi k.x) of a truncated Fourier series.
struct FourierTerm {
  std::array<int, 2> freq{0, 0};
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

class FourierSeries {
 public:
  FourierSeries() = default;
  explicit FourierSeries(std::vector<FourierTerm> terms) : terms_(std::move(terms)) {}

  static FourierSeries constant(double c) { return FourierSeries({{{0, 0}, c, 0.0}}); }

  double operator()(const Point& x) const;
  const std::vector<FourierTerm>& terms() const { return terms_; }

 private:
  std::vector<FourierTerm> terms_;
};

using ScalarCoefficient = std::function<double(const Point&)>;
using VectorCoefficient = std::function<Eigen::Vector2d(const Point&)>;
using MatrixCoefficient = std::function<Eigen::Matrix2d(const Point&)>;

ScalarCoefficient constant_coefficient(double c);
ScalarCoefficient fourier_coefficient(FourierSeries series);
/// Nearest-node lookup of a sampled field.
ScalarCoefficient field_coefficient(ScalarField field);

/// sigma(x) and A(x) = sigma sigma^T with the sampled ellipticity constant
/// nu = min eig A, |sigma|_inf and |sigma_x|_inf. Matrices are 2x2; on 1D
/// problems only the (0,0) entry is meaningful.
class DiffusionSpec {
 public:
  static DiffusionSpec isotropic(int dim, double nu);
  static DiffusionSpec zero(int dim);
  static DiffusionSpec from_sigma(int dim, MatrixCoefficient sigma,
                                  const TorusGrid& sample_grid);

  /// A + s I; sigma is replaced by the Cholesky factor of the new matrix.
  DiffusionSpec with_added_identity(double s, const TorusGrid& sample_grid) const;

  int dim() const { return dim_; }
  Eigen::Matrix2d sigma(const Point& x) const;
  Eigen::Matrix2d a(const Point& x) const;
  double nu() const { return nu_; }
  double sigma_sup() const { return sigma_sup_; }
  double sigma_lip() const { return sigma_lip_; }
  bool degenerate() const { return nu_ <= 0.0; }
  /// sup over the sampled nodes of max_i a_ii(x).
  double a_sup() const { return a_sup_; }

  /// Throws std::invalid_argument if A(x) >= (nu - tol) I fails somewhere
  /// on the grid or the stored norms underestimate the sampled ones.
  void check_admissible(const TorusGrid& grid, double tol = 1e-10) const;

 private:
  void measure(const TorusGrid& grid);

  int dim_ = 1;
  MatrixCoefficient sigma_;
  double nu_ = 0.0;
  double sigma_sup_ = 0.0;
  double sigma_lip_ = 0.0;
  double a_sup_ = 0.0;
};

/// Constant Ctilde(N, nu, |sigma|, |sigma_x|) of the Ishii-Lions trace
/// estimate. Metadata only.
double ctilde(int n, double nu, double sigma_sup, double sigma_lip);

/// Declared structure constants. Any of them may be unknown.
struct HamiltonianMetadata {
  std::optional<double> k;
  std::optional<double> C;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> growth_M;
};

class HamiltonianSpec;
using HamiltonianPtr = std::shared_ptr<const HamiltonianSpec>;

class HamiltonianSpec {
 public:
  /// a(x)|p|^k + ell(x)
  struct PowerCoercive {
    ScalarCoefficient a;
    double k;
    ScalarCoefficient ell;
  };
  /// |Sigma(x) p|^m + G(x,p); G may be null.
  struct SigmaPower {
    MatrixCoefficient sigma;
    double m;
    HamiltonianPtr g;
  };
  /// <b(x), p> + ell(x)
  struct Sublinear {
    VectorCoefficient b;
    ScalarCoefficient ell;
  };
  /// K(x,p) + alpha |p|^exponent
  struct PerturbedPower {
    HamiltonianPtr k_part;
    double alpha_coef;
    double exponent;
  };
  /// H(x,p) for |p| <= n, H(x, n p/|p|) beyond.
  struct Truncated {
    HamiltonianPtr inner;
    double n_trunc;
  };
  /// (1/q)|p|^m + inner(x,p)
  struct Regularized {
    HamiltonianPtr inner;
    double q;
    double m;
  };
  /// inner(x,p) + value
  struct Offset {
    HamiltonianPtr inner;
    double value;
  };
  struct Custom {
    std::function<double(const Point&, const VectorSample&)> eval;
    std::string name;
  };

  using Family = std::variant<PowerCoercive, SigmaPower, Sublinear, PerturbedPower,
                              Truncated, Regularized, Offset, Custom>;

  HamiltonianSpec(Family family, HamiltonianMetadata meta = {})
      : family_(std::move(family)), meta_(meta) {}

  static HamiltonianSpec power_coercive(ScalarCoefficient a, double k,
                                        ScalarCoefficient ell);
  static HamiltonianSpec sigma_power(MatrixCoefficient sigma, double m,
                                     std::optional<HamiltonianSpec> g = {});
  static HamiltonianSpec sublinear(VectorCoefficient b, ScalarCoefficient ell);
  static HamiltonianSpec perturbed_power(const HamiltonianSpec& k_part,
                                         double alpha_coef, double exponent);
  static HamiltonianSpec truncated(const HamiltonianSpec& inner, double n_trunc);
  static HamiltonianSpec regularized(const HamiltonianSpec& inner, double q,
                                     double m);
  static HamiltonianSpec offset(const HamiltonianSpec& inner, double value);
  static HamiltonianSpec custom(
      std::function<double(const Point&, const VectorSample&)> eval,
      std::string name = "custom");

  double operator()(const Point& x, const VectorSample& p) const;

  const Family& family() const { return family_; }
  const HamiltonianMetadata& metadata() const { return meta_; }
  HamiltonianSpec with_metadata(HamiltonianMetadata meta) const;
  std::string tag() const;

 private:
  Family family_;
  HamiltonianMetadata meta_;
};

double eval_H(const HamiltonianSpec& spec, const Point& x, const VectorSample& p);

/// sup over xs of |H(x, 0)|.
double sup_abs_H0(const HamiltonianSpec& spec, std::span<const Point> xs);

/// Uniform angular grid of unit vectors: {+1, -1} in 1D, `count` angles in 2D.
std::vector<VectorSample> unit_directions(int dim, int count = 64);

/// All nodes of the grid as points (optionally every `stride`-th per axis).
std::vector<Point> grid_points(const TorusGrid& grid, int stride = 1);

/// Smallest L > 1 (to relative tolerance `tol`) such that for every sampled
/// x, y and unit direction e,
///   H(x, L e) >= L [ H(y, e) + F + N |x - y| |sigma_x|^2 ],
/// where F is |H(., 0)|_inf unless `forcing` overrides it (the parabolic
/// variant uses |H(., Du0) - trace(A D^2 u0)|_inf). Throws NoFiniteL when
/// the inequality still fails at the cap 1e6.
double estimate_ssa4_L(const HamiltonianSpec& spec, const DiffusionSpec& diff,
                       std::span<const Point> xs,
                       std::span<const VectorSample> directions, double tol,
                       std::optional<double> forcing = std::nullopt);

struct CoercivityCheck {
  double k = 0.0;
  double C = 0.0;
  bool ok = true;
  /// min over samples of H - (|p|^k/C - C); negative when violated.
  double worst_margin = 0.0;
  Point worst_x = Point::Zero();
  VectorSample worst_p = VectorSample::Zero();
};

/// Verifies H(x,p) >= |p|^k / C - C on every sample.
CoercivityCheck check_coercivity(const HamiltonianSpec& spec, double k, double C,
                                 std::span<const Point> xs,
                                 std::span<const VectorSample> ps);
/// Same, with (k, C) taken from the spec's metadata; p samples are generated
/// on rays up to `radius`.
CoercivityCheck check_coercivity(const HamiltonianSpec& spec, double radius,
                                 std::span<const Point> xs, int dim);

/// Raw ingredients of the x-continuity structure conditions at one (x,y,p).
struct StructureDefect {
  double h_diff = 0.0;        ///< |H(x,p) - H(y,p)|
  double distance = 0.0;      ///< |x - y|
  double modulus_arg = 0.0;   ///< (1 + |p|^beta) |x - y|
  double growth_term = 0.0;   ///< |x - y|^alpha |p|^((k-1) alpha + k)
  double ln1_growth = 0.0;    ///< |x - y|^alpha |p|^(alpha + 2)
  double ln1_affine = 0.0;    ///< 1 + |p|^2

  /// h_diff - C * growth_term.
  double defect(double C) const { return h_diff - C * growth_term; }
  /// h_diff - C * (ln1_growth + ln1_affine).
  double ln1_defect(double C) const { return h_diff - C * (ln1_growth + ln1_affine); }
};

/// Uses metadata k, alpha, beta (defaults k = 2, alpha = 1, beta = 0).
StructureDefect structure_defect_LN2(const HamiltonianSpec& spec, const Point& x,
                                     const Point& y, const VectorSample& p,
                                     int dim);

struct ModulusSample {
  double modulus_arg;
  double ratio;  ///< h_diff / growth_term
};

struct AssumptionEstimates {
  std::optional<double> L_ssa4;
  double H0_sup = 0.0;
  std::optional<CoercivityCheck> coercivity;
  std::vector<ModulusSample> modulus_samples;
};

/// Gathers every sampled assumption diagnostic for one problem. Failure of
/// the growth condition leaves L_ssa4 empty rather than throwing.
AssumptionEstimates estimate_assumptions(const HamiltonianSpec& spec,
                                         const DiffusionSpec& diff,
                                         const TorusGrid& grid, double p_radius,
                                         double tol = 1e-6);

}  // namespace torushj
