#pragma once

// Monotone discrete operator shared by the stationary, ergodic and evolution
// solvers: Lax-Friedrichs numerical Hamiltonian plus the monotone diffusion
// stencil,
//
//   F_h(v)_i = eps v_i - sum_j w_ij (v_j - v_i) + H_LF(x_i, p-_i, p+_i).

#include <array>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "torushj/problem.hpp"
#include "torushj/torus_grid.hpp"

namespace torushj {

struct SchemeConfig {
  /// Artificial viscosity per axis; must dominate |dH/dp_i| on the box.
  std::array<double, 2> theta{0.0, 0.0};
  /// Bound P_i on |p_i| the viscosity was certified for.
  std::array<double, 2> gradient_box{1.0, 1.0};
  double tol_residual = 1e-8;
  int max_newton = 100;
  double damping = 0.5;
};

/// 1e-8 (1 + |H(., 0)|_inf).
double default_tol_residual(double h0_sup);

/// Sampled max of |dH/dp_i| (central differences) over the grid nodes and a
/// lattice of the box |p_i| <= P_i, inflated by 10%.
std::array<double, 2> certify_theta(const HamiltonianSpec& spec, const TorusGrid& grid,
                                    const std::array<double, 2>& box,
                                    int samples_per_axis = 33);

SchemeConfig make_scheme_config(const HamiltonianSpec& spec, const TorusGrid& grid,
                                const std::array<double, 2>& box,
                                double tol_residual);

/// Componentwise max of the viscosities of two configs (box as well).
SchemeConfig merge_scheme_configs(const SchemeConfig& a, const SchemeConfig& b);

/// H(x, (p- + p+)/2) - sum_i theta_i (p+_i - p-_i)/2.
double lf_hamiltonian(const HamiltonianSpec& spec, const Point& x,
                      const VectorSample& p_minus, const VectorSample& p_plus,
                      const std::array<double, 2>& theta);

class DiscreteOperator {
 public:
  /// Throws StencilNotMonotone if A violates the cross-term condition.
  DiscreteOperator(TorusGrid grid, HamiltonianSpec hamiltonian, DiffusionSpec diffusion,
                   SchemeConfig config);

  const TorusGrid& grid() const { return grid_; }
  const HamiltonianSpec& hamiltonian() const { return hamiltonian_; }
  const DiffusionSpec& diffusion() const { return diffusion_; }
  const SchemeConfig& config() const { return config_; }
  std::size_t size() const { return grid_.size(); }

  Eigen::VectorXd residual(const Eigen::VectorXd& v, double eps) const;
  /// Lax-Friedrichs part only.
  Eigen::VectorXd hamiltonian_part(const Eigen::VectorXd& v) const;
  /// sum_j w_ij (v_j - v_i), the discrete trace(A D^2 v).
  Eigen::VectorXd diffusion_part(const Eigen::VectorXd& v) const;
  Eigen::SparseMatrix<double> diffusion_matrix() const;

  /// Central finite-difference directional derivative of the residual with
  /// probe step 1e-6 (1 + |v|_inf) scaled to the direction's magnitude.
  Eigen::VectorXd jacobian_apply(const Eigen::VectorXd& v, const Eigen::VectorXd& dir,
                                 double eps) const;
  /// Same finite differences, assembled column-blockwise through a
  /// distance-2 colouring of the stencil graph.
  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& v, double eps) const;

  /// Largest explicit pseudo-time step keeping w - dt F(w) monotone:
  /// 1 / (eps + max_i sum_j w_ij + sum_k theta_k / h_k). The centre weight
  /// never exceeds 2 sum_k a_sup / h_k^2, so this is at least as large as
  /// the cruder bound built from a_sup.
  double pseudo_time_step(double eps) const;
  /// sum_k theta_k / h_k
  double hamiltonian_cfl_rate() const;

  /// Componentwise max over nodes of max(|p-_k|, |p+_k|).
  std::array<double, 2> max_one_sided_gradient(const Eigen::VectorXd& v) const;

  const std::vector<StencilWeights>& stencils() const { return stencils_; }
  int colour_count() const { return colour_count_; }

 private:
  double probe_step(const Eigen::VectorXd& v) const;

  TorusGrid grid_;
  HamiltonianSpec hamiltonian_;
  DiffusionSpec diffusion_;
  SchemeConfig config_;
  std::vector<Point> points_;
  std::vector<std::array<std::size_t, 4>> axis_neighbours_;  // (-0, +0, -1, +1)
  std::vector<StencilWeights> stencils_;
  std::vector<std::vector<std::size_t>> support_;  // columns row i depends on
  std::vector<int> colour_;
  int colour_count_ = 0;
};

ScalarField residual(const ScalarField& v, double eps, const HamiltonianSpec& spec,
                     const DiffusionSpec& diff, const SchemeConfig& cfg);

ScalarField jacobian_apply(const ScalarField& v, const ScalarField& direction,
                           double eps, const HamiltonianSpec& spec,
                           const DiffusionSpec& diff, const SchemeConfig& cfg);

}  // namespace torushj
