#pragma once

// Periodic lattice on the flat torus [0,1)^d, d in {1,2}, together with
// scalar fields living on it and the finite-difference stencils shared by
// every solver.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace torushj {

/// Points and gradient samples always carry two components; the second is
/// zero on one-dimensional grids.
using Point = Eigen::Vector2d;
using VectorSample = Eigen::Vector2d;
using MultiIndex = std::array<int, 2>;

class DiffusionSpec;

class TorusGrid {
 public:
  /// counts.size() is the dimension; every count must be >= 8.
  explicit TorusGrid(std::vector<int> counts);

  static TorusGrid line(int n) { return TorusGrid({n}); }
  static TorusGrid square(int n0, int n1) { return TorusGrid({n0, n1}); }

  int dim() const { return dim_; }
  int count(int axis) const { return counts_[axis]; }
  double spacing(int axis) const { return 1.0 / counts_[axis]; }
  std::size_t size() const {
    return static_cast<std::size_t>(counts_[0]) * counts_[1];
  }
  std::vector<int> counts() const;

  /// Row-major flat index; both components are wrapped.
  std::size_t flat(const MultiIndex& i) const;
  MultiIndex multi(std::size_t node) const;
  std::size_t shift(std::size_t node, int axis, int offset) const;
  Point point(std::size_t node) const;

  /// Torus distance between two lattice points whose raw index differences
  /// along each axis are (d0, d1). Symmetric in the sign of the offsets.
  double offset_distance(int d0, int d1) const;

  TorusGrid refined(int factor) const;

  bool operator==(const TorusGrid& other) const {
    return dim_ == other.dim_ && counts_ == other.counts_;
  }

 private:
  int dim_ = 1;
  std::array<int, 2> counts_{8, 1};
};

double periodic_distance(const TorusGrid& grid, const MultiIndex& i,
                         const MultiIndex& j);

/// Distance on the unit torus between arbitrary points.
double torus_distance(const Point& x, const Point& y, int dim);

class ScalarField {
 public:
  ScalarField(TorusGrid grid, std::vector<double> values);
  ScalarField(TorusGrid grid, const Eigen::VectorXd& values);

  static ScalarField constant(const TorusGrid& grid, double value);
  static ScalarField sample(const TorusGrid& grid,
                            const std::function<double(const Point&)>& fn);

  const TorusGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t node) const { return values_[node]; }
  double at(const MultiIndex& i) const { return values_[grid_.flat(i)]; }

  Eigen::VectorXd to_vector() const;

  double min() const;
  double max() const;
  double sup_norm() const;

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

struct OneSidedGradients {
  VectorSample minus = VectorSample::Zero();
  VectorSample plus = VectorSample::Zero();
};

OneSidedGradients one_sided_gradients(const ScalarField& field,
                                      const MultiIndex& i);

/// Off-center neighbours and their weights in the monotone discretization
/// of trace(A D^2 v) at one node:
///   trace(A D^2 v)(x_i) ~ sum_k weights[k] * (v[nodes[k]] - v[i]).
struct StencilWeights {
  std::array<std::size_t, 6> nodes{};
  std::array<double, 6> weights{};
  int count = 0;

  double center() const;
};

/// Builds the 3-point (1D) or 7-point (2D) stencil for the matrix a at node.
/// In 2D the cross term uses the diagonal matching sign(a12) and requires
/// |a12| * h0/h1 <= a11 and |a12| * h1/h0 <= a22 (|a12| <= min(a11, a22)
/// on square cells); violations throw StencilNotMonotone.
StencilWeights diffusion_stencil(const TorusGrid& grid, std::size_t node,
                                 const Eigen::Matrix2d& a);

double diffusion_term(const ScalarField& field, const DiffusionSpec& diff,
                      const MultiIndex& i);

}  // namespace torushj
