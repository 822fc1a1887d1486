#include "torushj/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "torushj/errors.hpp"

namespace torushj {

namespace {

// Distances depend only on the wrapped offset, so they are tabulated once
// per grid: table[d0 * n1 + d1].
std::vector<double> offset_distances(const TorusGrid& g) {
  const int n0 = g.count(0);
  const int n1 = g.count(1);
  std::vector<double> out(g.size());
  for (int d0 = 0; d0 < n0; ++d0) {
    for (int d1 = 0; d1 < n1; ++d1) {
      out[static_cast<std::size_t>(d0) * n1 + d1] = g.offset_distance(d0, d1);
    }
  }
  return out;
}

std::size_t offset_index(const TorusGrid& g, std::size_t i, std::size_t j) {
  const MultiIndex a = g.multi(i);
  const MultiIndex b = g.multi(j);
  const int n0 = g.count(0);
  const int n1 = g.count(1);
  const int d0 = ((b[0] - a[0]) % n0 + n0) % n0;
  const int d1 = ((b[1] - a[1]) % n1 + n1) % n1;
  return static_cast<std::size_t>(d0) * n1 + d1;
}

// Calls f(i, j, offset) for every scanned unordered pair. Returns whether the
// scan was exhaustive.
template <class F>
bool scan_pairs(const TorusGrid& g, const PairScanOptions& opts, F&& f) {
  const std::size_t n = g.size();
  const int n0 = g.count(0);
  const int n1 = g.count(1);
  if (pair_count(g) <= opts.pair_cap) {
    for (std::size_t i = 0; i < n; ++i) {
      const int a0 = static_cast<int>(i) / n1;
      const int a1 = static_cast<int>(i) % n1;
      for (std::size_t j = i + 1; j < n; ++j) {
        const int b0 = static_cast<int>(j) / n1;
        const int b1 = static_cast<int>(j) % n1;
        const int d0 = b0 - a0;  // >= 0 since j > i
        const int d1 = ((b1 - a1) % n1 + n1) % n1;
        f(i, j, static_cast<std::size_t>(d0 % n0) * n1 + d1);
      }
    }
    return true;
  }
  std::vector<MultiIndex> steps = {{1, 0}};
  if (g.dim() == 2) steps = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  for (std::size_t i = 0; i < n; ++i) {
    const MultiIndex a = g.multi(i);
    for (const MultiIndex& s : steps) {
      const std::size_t j = g.flat({a[0] + s[0], a[1] + s[1]});
      if (j != i) f(i, j, offset_index(g, i, j));
    }
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t k = 0; k < opts.pair_cap; ++k) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    if (i != j) f(i, j, offset_index(g, i, j));
  }
  return false;
}

}  // namespace

double oscillation(const ScalarField& field) { return field.max() - field.min(); }

double lipschitz_seminorm(const ScalarField& field) {
  const TorusGrid& g = field.grid();
  double lip = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int k = 0; k < g.dim(); ++k) {
      const double d = std::abs(field[g.shift(i, k, 1)] - field[i]) / g.spacing(k);
      lip = std::max(lip, d);
    }
  }
  return lip;
}

std::size_t pair_count(const TorusGrid& grid) {
  const std::size_t n = grid.size();
  return n * (n - 1) / 2;
}

double holder_seminorm(const ScalarField& field, double gamma,
                       const PairScanOptions& opts) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("holder_seminorm: gamma must lie in (0, 1]");
  }
  const TorusGrid& g = field.grid();
  std::vector<double> powd = offset_distances(g);
  for (double& d : powd) d = std::pow(d, gamma);

  double s = 0.0;
  scan_pairs(g, opts, [&](std::size_t i, std::size_t j, std::size_t off) {
    s = std::max(s, std::abs(field[i] - field[j]) / powd[off]);
  });
  // Division and multiplication do not round-trip exactly; nudge s up until
  // the certificate Psi = s d^gamma dominates every scanned pair.
  scan_pairs(g, opts, [&](std::size_t i, std::size_t j, std::size_t off) {
    const double diff = std::abs(field[i] - field[j]);
    while (diff - s * powd[off] > 0.0) {
      s = std::nextafter(s, std::numeric_limits<double>::infinity());
    }
  });
  return s;
}

CertificateParams CertificateParams::holder_power(double K, double gamma) {
  CertificateParams p;
  p.variant = CertificateVariant::holder_power;
  p.gamma = gamma;
  p.A1 = K;
  return p;
}

CertificateParams CertificateParams::concave_lip(double osc, double gamma, double A2) {
  if (!(gamma > 0.0 && gamma < 1.0) || !(A2 > 0.0) || osc < 0.0) {
    throw std::invalid_argument("concave_lip: need gamma in (0,1), A2 > 0, osc >= 0");
  }
  CertificateParams p;
  p.variant = CertificateVariant::concave_lip;
  p.gamma = gamma;
  p.A2 = A2;
  p.r = 1.0 / (3.0 * A2);
  p.A1 = (osc + 1.0) / (1.0 / 3.0 - std::pow(3.0, -1.0 - gamma));
  return p;
}

double CertificateParams::psi(double s) const {
  if (variant == CertificateVariant::holder_power) return A1 * std::pow(s, gamma);
  const double t = A2 * std::min(s, r);
  return A1 * (t - std::pow(t, 1.0 + gamma));
}

CertificateResult doubling_certificate(const ScalarField& field,
                                       const CertificateParams& params,
                                       const PairScanOptions& opts) {
  const TorusGrid& g = field.grid();
  std::vector<double> psi = offset_distances(g);
  for (double& d : psi) d = params.psi(d);

  CertificateResult out;
  out.M = -std::numeric_limits<double>::infinity();
  out.exhaustive = scan_pairs(g, opts, [&](std::size_t i, std::size_t j, std::size_t off) {
    const double a = field[i] - field[j] - psi[off];
    const double b = field[j] - field[i] - psi[off];
    if (a > out.M) {
      out.M = a;
      out.argmax = {i, j};
    }
    if (b > out.M) {
      out.M = b;
      out.argmax = {j, i};
    }
  });
  double hmax = 0.0;
  for (int k = 0; k < g.dim(); ++k) hmax = std::max(hmax, g.spacing(k));
  out.slack = 2.0 * lipschitz_seminorm(field) * hmax;
  out.certified = out.M + out.slack <= 0.0;
  return out;
}

double minimal_certificate_A2(const ScalarField& field, double gamma,
                              const PairScanOptions& opts) {
  const double osc = oscillation(field);
  auto M = [&](double a2) {
    return doubling_certificate(field, CertificateParams::concave_lip(osc, gamma, a2), opts)
        .M;
  };
  double lo = 1.0 / 3.0;
  double hi = 1e6;
  if (M(lo) <= 0.0) return lo;
  if (M(hi) > 0.0) {
    std::ostringstream msg;
    msg << "no A2 <= 1e6 certifies the field (gamma=" << gamma << ")";
    throw NotCertifiable(msg.str());
  }
  // M is nonincreasing in A2 because Psi increases with A2 pointwise.
  while (hi > 1.01 * lo) {
    const double mid = std::sqrt(lo * hi);
    if (M(mid) <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

ConeCheck cone_bound_check(const ScalarField& field, double L) {
  if (!(L > 0.0)) throw std::invalid_argument("cone_bound_check: L must be positive");
  const TorusGrid& g = field.grid();
  ConeCheck out;
  out.L = L;
  const auto values = field.values();
  out.argmin = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  const MultiIndex m = g.multi(out.argmin);
  out.worst_defect = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = periodic_distance(g, g.multi(i), m);
    const double defect = field[i] - field[out.argmin] - L * d;
    if (defect > out.worst_defect) {
      out.worst_defect = defect;
      out.worst_node = i;
    }
  }
  return out;
}

RegularityReport analyze(const ScalarField& field, const std::vector<double>& gammas,
                         std::optional<double> certificate_gamma,
                         std::optional<double> cone_L, const PairScanOptions& opts) {
  RegularityReport rep;
  rep.osc = oscillation(field);
  rep.lip = lipschitz_seminorm(field);
  for (double gamma : gammas) rep.holder[gamma] = holder_seminorm(field, gamma, opts);
  if (certificate_gamma) {
    const double a2 = minimal_certificate_A2(field, *certificate_gamma, opts);
    rep.certificate = CertificateParams::concave_lip(rep.osc, *certificate_gamma, a2);
    rep.certificate_result = doubling_certificate(field, *rep.certificate, opts);
    rep.certified_constant = rep.certificate->A1 * a2;
  }
  if (cone_L) rep.cone = cone_bound_check(field, *cone_L);
  return rep;
}

}  // namespace torushj
