#pragma once

// Regularity measurements on grid fields: oscillation, Lipschitz and Hoelder
// seminorms, doubling-of-variables certificates and the cone bound around the
// minimum.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "torushj/torus_grid.hpp"

namespace torushj {

double oscillation(const ScalarField& field);

/// max over axis-neighbour pairs of |v(x) - v(y)| / h.
double lipschitz_seminorm(const ScalarField& field);

/// Pair scans enumerate every unordered pair of distinct nodes while their
/// number stays at or below `pair_cap`. Above it they visit every neighbour
/// pair (axis and diagonal) plus `pair_cap` pairs drawn with `seed`.
struct PairScanOptions {
  std::size_t pair_cap = 10'000'000;
  std::uint64_t seed = 20240611;
};

std::size_t pair_count(const TorusGrid& grid);

/// max over pairs of |v(x) - v(y)| / d(x,y)^gamma. The returned value is
/// rounded up so that |v(x) - v(y)| - value * d^gamma <= 0 holds in floating
/// point for every scanned pair.
double holder_seminorm(const ScalarField& field, double gamma,
                       const PairScanOptions& opts = {});

enum class CertificateVariant { holder_power, concave_lip };

struct CertificateParams {
  CertificateVariant variant = CertificateVariant::holder_power;
  double gamma = 1.0;
  double A1 = 0.0;  ///< K for holder_power
  double A2 = 0.0;
  double r = 0.0;   ///< cap radius for concave_lip

  /// Psi(s) = K s^gamma.
  static CertificateParams holder_power(double K, double gamma);
  /// Psi(s) = A1 [A2 s - (A2 s)^(1+gamma)] for s <= r, Psi(r) beyond, with
  /// A2 r = 1/3 and Psi(r) = osc + 1.
  static CertificateParams concave_lip(double osc, double gamma, double A2);

  double psi(double s) const;
};

struct NodePair {
  std::size_t x = 0;
  std::size_t y = 0;
};

struct CertificateResult {
  /// max over scanned pairs x != y of v(x) - v(y) - Psi(d(x,y)).
  double M = 0.0;
  NodePair argmax;
  /// 2 Lip(v) h_max, added to M before the reported sign test.
  double slack = 0.0;
  bool certified = false;  ///< M + slack <= 0
  bool exhaustive = true;
};

CertificateResult doubling_certificate(const ScalarField& field,
                                       const CertificateParams& params,
                                       const PairScanOptions& opts = {});

/// Smallest A2 in [1/3, 1e6] (1% relative) for which the concave certificate
/// has M <= 0 (grid maximum, no slack). A1 is fixed by the normalisation, so
/// A1 * A2 is the certified Lipschitz-type constant. Throws NotCertifiable.
double minimal_certificate_A2(const ScalarField& field, double gamma,
                              const PairScanOptions& opts = {});

struct ConeCheck {
  double L = 0.0;
  double worst_defect = 0.0;  ///< max_x v(x) - v(x_min) - L d(x, x_min)
  std::size_t argmin = 0;
  std::size_t worst_node = 0;
};

ConeCheck cone_bound_check(const ScalarField& field, double L);

struct RegularityReport {
  double osc = 0.0;
  double lip = 0.0;
  std::map<double, double> holder;
  std::optional<CertificateParams> certificate;
  std::optional<CertificateResult> certificate_result;
  std::optional<double> certified_constant;  ///< A1 * A2
  std::optional<ConeCheck> cone;
};

/// Gathers every measurement. The concave certificate is computed when
/// `certificate_gamma` is set, the cone check when `cone_L` is set.
RegularityReport analyze(const ScalarField& field, const std::vector<double>& gammas,
                         std::optional<double> certificate_gamma = std::nullopt,
                         std::optional<double> cone_L = std::nullopt,
                         const PairScanOptions& opts = {});

}  // namespace torushj
