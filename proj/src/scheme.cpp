#include "torushj/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "torushj/errors.hpp"

namespace torushj {

double default_tol_residual(double h0_sup) { return 1e-8 * (1.0 + h0_sup); }

std::array<double, 2> certify_theta(const HamiltonianSpec& spec, const TorusGrid& grid,
                                    const std::array<double, 2>& box,
                                    int samples_per_axis) {
  if (samples_per_axis < 2) {
    throw std::invalid_argument("certify_theta: need at least two samples per axis");
  }
  const int dim = grid.dim();
  // Keep at most 64 nodes per axis; H is continuous in x, and the scheme
  // only evaluates H at nodes, so on small grids every node is covered.
  int stride = 1;
  while (grid.count(0) / stride > 64 || (dim == 2 && grid.count(1) / stride > 64)) {
    ++stride;
  }
  const std::vector<Point> xs = grid_points(grid, stride);

  auto lattice = [&](double bound) {
    std::vector<double> out(samples_per_axis);
    for (int s = 0; s < samples_per_axis; ++s) {
      out[s] = -bound + 2.0 * bound * s / (samples_per_axis - 1);
    }
    return out;
  };
  const std::vector<double> l0 = lattice(box[0]);
  const std::vector<double> l1 = dim == 2 ? lattice(box[1]) : std::vector<double>{0.0};

  std::array<double, 2> theta{0.0, 0.0};
  for (const Point& x : xs) {
    for (double p0 : l0) {
      for (double p1 : l1) {
        const VectorSample p(p0, p1);
        for (int k = 0; k < dim; ++k) {
          const double delta = 1e-6 * (1.0 + std::abs(p[k]));
          VectorSample pp = p, pm = p;
          pp[k] += delta;
          pm[k] -= delta;
          const double d = std::abs(spec(x, pp) - spec(x, pm)) / (2.0 * delta);
          if (std::isfinite(d)) theta[k] = std::max(theta[k], d);
        }
      }
    }
  }
  for (int k = 0; k < dim; ++k) theta[k] = 1.1 * theta[k] + 1e-12;
  return theta;
}

SchemeConfig make_scheme_config(const HamiltonianSpec& spec, const TorusGrid& grid,
                                const std::array<double, 2>& box,
                                double tol_residual) {
  SchemeConfig cfg;
  cfg.gradient_box = box;
  if (grid.dim() == 1) cfg.gradient_box[1] = 0.0;
  cfg.theta = certify_theta(spec, grid, cfg.gradient_box);
  cfg.tol_residual = tol_residual;
  return cfg;
}

SchemeConfig merge_scheme_configs(const SchemeConfig& a, const SchemeConfig& b) {
  SchemeConfig out = a;
  for (int k = 0; k < 2; ++k) {
    out.theta[k] = std::max(a.theta[k], b.theta[k]);
    out.gradient_box[k] = std::max(a.gradient_box[k], b.gradient_box[k]);
  }
  out.tol_residual = std::max(a.tol_residual, b.tol_residual);
  return out;
}

double lf_hamiltonian(const HamiltonianSpec& spec, const Point& x,
                      const VectorSample& p_minus, const VectorSample& p_plus,
                      const std::array<double, 2>& theta) {
  const VectorSample mid = 0.5 * (p_minus + p_plus);
  double value = spec(x, mid);
  for (int k = 0; k < 2; ++k) value -= 0.5 * theta[k] * (p_plus[k] - p_minus[k]);
  return value;
}

DiscreteOperator::DiscreteOperator(TorusGrid grid, HamiltonianSpec hamiltonian,
                                   DiffusionSpec diffusion, SchemeConfig config)
    : grid_(std::move(grid)),
      hamiltonian_(std::move(hamiltonian)),
      diffusion_(std::move(diffusion)),
      config_(config) {
  if (config_.tol_residual <= 0.0) {
    throw std::invalid_argument("SchemeConfig: tol_residual must be positive");
  }
  if (grid_.dim() == 1) config_.theta[1] = 0.0;
  const std::size_t n = grid_.size();
  points_.resize(n);
  axis_neighbours_.resize(n);
  stencils_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    points_[i] = grid_.point(i);
    axis_neighbours_[i] = {grid_.shift(i, 0, -1), grid_.shift(i, 0, 1),
                           grid_.dim() == 2 ? grid_.shift(i, 1, -1) : i,
                           grid_.dim() == 2 ? grid_.shift(i, 1, 1) : i};
    stencils_[i] = diffusion_stencil(grid_, i, diffusion_.a(points_[i]));
  }

  // Greedy distance-2 colouring: two columns may share a colour only if no
  // row depends on both of them.
  support_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = support_[i];
    auto add = [&s](std::size_t j) {
      if (std::find(s.begin(), s.end(), j) == s.end()) s.push_back(j);
    };
    add(i);
    for (std::size_t j : axis_neighbours_[i]) add(j);
    const StencilWeights& st = stencils_[i];
    for (int k = 0; k < st.count; ++k) add(st.nodes[k]);
  }
  std::vector<std::vector<std::size_t>> rows_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : support_[i]) rows_of[j].push_back(i);
  }
  colour_.assign(n, -1);
  std::vector<char> used;
  for (std::size_t j = 0; j < n; ++j) {
    used.assign(static_cast<std::size_t>(colour_count_) + 1, 0);
    for (std::size_t i : rows_of[j]) {
      for (std::size_t k : support_[i]) {
        if (colour_[k] >= 0) used[colour_[k]] = 1;
      }
    }
    int c = 0;
    while (used[c]) ++c;
    colour_[j] = c;
    colour_count_ = std::max(colour_count_, c + 1);
  }
}

Eigen::VectorXd DiscreteOperator::hamiltonian_part(const Eigen::VectorXd& v) const {
  const std::size_t n = size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  const double h0 = grid_.spacing(0);
  const double h1 = grid_.spacing(1);
  const bool two_d = grid_.dim() == 2;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = axis_neighbours_[i];
    VectorSample pm(0.0, 0.0), pp(0.0, 0.0);
    pm[0] = (v[i] - v[nb[0]]) / h0;
    pp[0] = (v[nb[1]] - v[i]) / h0;
    if (two_d) {
      pm[1] = (v[i] - v[nb[2]]) / h1;
      pp[1] = (v[nb[3]] - v[i]) / h1;
    }
    out[i] = lf_hamiltonian(hamiltonian_, points_[i], pm, pp, config_.theta);
  }
  return out;
}

Eigen::VectorXd DiscreteOperator::diffusion_part(const Eigen::VectorXd& v) const {
  const std::size_t n = size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const StencilWeights& st = stencils_[i];
    double sum = 0.0;
    for (int k = 0; k < st.count; ++k) sum += st.weights[k] * (v[st.nodes[k]] - v[i]);
    out[i] = sum;
  }
  return out;
}

Eigen::VectorXd DiscreteOperator::residual(const Eigen::VectorXd& v, double eps) const {
  if (static_cast<std::size_t>(v.size()) != size()) {
    throw std::invalid_argument("residual: vector size does not match grid");
  }
  return eps * v - diffusion_part(v) + hamiltonian_part(v);
}

Eigen::SparseMatrix<double> DiscreteOperator::diffusion_matrix() const {
  const std::size_t n = size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * 7);
  for (std::size_t i = 0; i < n; ++i) {
    const StencilWeights& st = stencils_[i];
    const auto row = static_cast<Eigen::Index>(i);
    trip.emplace_back(row, row, -st.center());
    for (int k = 0; k < st.count; ++k) {
      trip.emplace_back(row, static_cast<Eigen::Index>(st.nodes[k]), st.weights[k]);
    }
  }
  Eigen::SparseMatrix<double> d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  d.setFromTriplets(trip.begin(), trip.end());
  return d;
}

double DiscreteOperator::probe_step(const Eigen::VectorXd& v) const {
  return 1e-6 * (1.0 + v.lpNorm<Eigen::Infinity>());
}

Eigen::VectorXd DiscreteOperator::jacobian_apply(const Eigen::VectorXd& v,
                                                 const Eigen::VectorXd& dir,
                                                 double eps) const {
  const double scale = dir.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return Eigen::VectorXd::Zero(v.size());
  const double t = probe_step(v);
  const Eigen::VectorXd d = dir / scale;
  return (residual(v + t * d, eps) - residual(v - t * d, eps)) * (scale / (2.0 * t));
}

Eigen::SparseMatrix<double> DiscreteOperator::jacobian(const Eigen::VectorXd& v,
                                                       double eps) const {
  const std::size_t n = size();
  const double t = probe_step(v);
  std::vector<Eigen::VectorXd> columns(colour_count_);
  for (int c = 0; c < colour_count_; ++c) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(v.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (colour_[j] == c) d[j] = 1.0;
    }
    columns[c] = (residual(v + t * d, eps) - residual(v - t * d, eps)) / (2.0 * t);
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * 9);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : support_[i]) {
      const double value = columns[colour_[j]][i];
      if (value != 0.0 || j == i) {
        trip.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j),
                          value);
      }
    }
  }
  Eigen::SparseMatrix<double> jac(static_cast<Eigen::Index>(n),
                                  static_cast<Eigen::Index>(n));
  jac.setFromTriplets(trip.begin(), trip.end());
  return jac;
}

double DiscreteOperator::hamiltonian_cfl_rate() const {
  double rate = 0.0;
  for (int k = 0; k < grid_.dim(); ++k) rate += config_.theta[k] / grid_.spacing(k);
  return rate;
}

double DiscreteOperator::pseudo_time_step(double eps) const {
  double centre = 0.0;
  for (const StencilWeights& st : stencils_) centre = std::max(centre, st.center());
  return 1.0 / (eps + centre + hamiltonian_cfl_rate());
}

std::array<double, 2> DiscreteOperator::max_one_sided_gradient(
    const Eigen::VectorXd& v) const {
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& nb = axis_neighbours_[i];
    for (int k = 0; k < grid_.dim(); ++k) {
      const double h = grid_.spacing(k);
      const double m = std::abs(v[i] - v[nb[2 * k]]) / h;
      const double p = std::abs(v[nb[2 * k + 1]] - v[i]) / h;
      out[k] = std::max({out[k], m, p});
    }
  }
  return out;
}

ScalarField residual(const ScalarField& v, double eps, const HamiltonianSpec& spec,
                     const DiffusionSpec& diff, const SchemeConfig& cfg) {
  const DiscreteOperator op(v.grid(), spec, diff, cfg);
  return ScalarField(v.grid(), op.residual(v.to_vector(), eps));
}

ScalarField jacobian_apply(const ScalarField& v, const ScalarField& direction,
                           double eps, const HamiltonianSpec& spec,
                           const DiffusionSpec& diff, const SchemeConfig& cfg) {
  if (!(direction.grid() == v.grid())) {
    throw std::invalid_argument("jacobian_apply: direction lives on another grid");
  }
  const DiscreteOperator op(v.grid(), spec, diff, cfg);
  return ScalarField(v.grid(), op.jacobian_apply(v.to_vector(), direction.to_vector(), eps));
}

}  // namespace torushj
