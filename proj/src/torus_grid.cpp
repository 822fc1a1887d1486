#include "torushj/torus_grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "torushj/errors.hpp"
#include "torushj/problem.hpp"

namespace torushj {

namespace {

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace

TorusGrid::TorusGrid(std::vector<int> counts) {
  if (counts.empty() || counts.size() > 2) {
    throw std::invalid_argument("TorusGrid: dimension must be 1 or 2");
  }
  for (int n : counts) {
    if (n < 8) {
      throw std::invalid_argument("TorusGrid: every axis needs at least 8 cells");
    }
  }
  dim_ = static_cast<int>(counts.size());
  counts_ = {counts[0], dim_ == 2 ? counts[1] : 1};
}

std::vector<int> TorusGrid::counts() const {
  if (dim_ == 1) return {counts_[0]};
  return {counts_[0], counts_[1]};
}

std::size_t TorusGrid::flat(const MultiIndex& i) const {
  const int i0 = wrap(i[0], counts_[0]);
  const int i1 = dim_ == 2 ? wrap(i[1], counts_[1]) : 0;
  return static_cast<std::size_t>(i0) * counts_[1] + i1;
}

MultiIndex TorusGrid::multi(std::size_t node) const {
  return {static_cast<int>(node / counts_[1]),
          static_cast<int>(node % counts_[1])};
}

std::size_t TorusGrid::shift(std::size_t node, int axis, int offset) const {
  MultiIndex i = multi(node);
  i[axis] += offset;
  return flat(i);
}

Point TorusGrid::point(std::size_t node) const {
  const MultiIndex i = multi(node);
  return {static_cast<double>(i[0]) / counts_[0],
          dim_ == 2 ? static_cast<double>(i[1]) / counts_[1] : 0.0};
}

double TorusGrid::offset_distance(int d0, int d1) const {
  auto axis = [&](int d, int n) {
    const int m = std::abs(wrap(d, n));
    return static_cast<double>(std::min(m, n - m)) / n;
  };
  const double x = axis(d0, counts_[0]);
  if (dim_ == 1) return x;
  const double y = axis(d1, counts_[1]);
  return std::sqrt(x * x + y * y);
}

TorusGrid TorusGrid::refined(int factor) const {
  std::vector<int> c = counts();
  for (int& n : c) n *= factor;
  return TorusGrid(std::move(c));
}

double periodic_distance(const TorusGrid& grid, const MultiIndex& i,
                         const MultiIndex& j) {
  return grid.offset_distance(i[0] - j[0], i[1] - j[1]);
}

double torus_distance(const Point& x, const Point& y, int dim) {
  double sum = 0.0;
  for (int k = 0; k < dim; ++k) {
    double d = x[k] - y[k];
    d -= std::round(d);
    sum += d * d;
  }
  return std::sqrt(sum);
}

ScalarField::ScalarField(TorusGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("ScalarField: value count does not match grid");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ScalarField: non-finite value");
    }
  }
}

ScalarField::ScalarField(TorusGrid grid, const Eigen::VectorXd& values)
    : ScalarField(std::move(grid),
                  std::vector<double>(values.data(), values.data() + values.size())) {}

ScalarField ScalarField::constant(const TorusGrid& grid, double value) {
  return ScalarField(grid, std::vector<double>(grid.size(), value));
}

ScalarField ScalarField::sample(const TorusGrid& grid,
                                const std::function<double(const Point&)>& fn) {
  std::vector<double> v(grid.size());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = fn(grid.point(n));
  return ScalarField(grid, std::move(v));
}

Eigen::VectorXd ScalarField::to_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(values_.data(),
                                          static_cast<Eigen::Index>(values_.size()));
}

double ScalarField::min() const {
  return *std::min_element(values_.begin(), values_.end());
}

double ScalarField::max() const {
  return *std::max_element(values_.begin(), values_.end());
}

double ScalarField::sup_norm() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

OneSidedGradients one_sided_gradients(const ScalarField& field,
                                      const MultiIndex& i) {
  const TorusGrid& g = field.grid();
  const std::size_t c = g.flat(i);
  OneSidedGradients out;
  for (int k = 0; k < g.dim(); ++k) {
    const double h = g.spacing(k);
    out.minus[k] = (field[c] - field[g.shift(c, k, -1)]) / h;
    out.plus[k] = (field[g.shift(c, k, 1)] - field[c]) / h;
  }
  return out;
}

double StencilWeights::center() const {
  double s = 0.0;
  for (int k = 0; k < count; ++k) s += weights[k];
  return s;
}

StencilWeights diffusion_stencil(const TorusGrid& grid, std::size_t node,
                                 const Eigen::Matrix2d& a) {
  StencilWeights st;
  auto push = [&](std::size_t j, double w) {
    st.nodes[st.count] = j;
    st.weights[st.count] = w;
    ++st.count;
  };
  const double h0 = grid.spacing(0);
  if (grid.dim() == 1) {
    const double w = a(0, 0) / (h0 * h0);
    push(grid.shift(node, 0, -1), w);
    push(grid.shift(node, 0, 1), w);
    return st;
  }

  const double h1 = grid.spacing(1);
  const double a12 = 0.5 * (a(0, 1) + a(1, 0));
  const double cross = std::abs(a12);
  double w0 = a(0, 0) - cross * h0 / h1;
  double w1 = a(1, 1) - cross * h1 / h0;
  const double scale = std::max({std::abs(a(0, 0)), std::abs(a(1, 1)), 1e-300});
  if (w0 < -1e-12 * scale || w1 < -1e-12 * scale) {
    std::ostringstream msg;
    msg << "diffusion stencil not monotone at node " << node << ": |a12|=" << cross
        << " exceeds diagonal dominance (a11=" << a(0, 0) << ", a22=" << a(1, 1)
        << ")";
    throw StencilNotMonotone(msg.str());
  }
  w0 = std::max(w0, 0.0) / (h0 * h0);
  w1 = std::max(w1, 0.0) / (h1 * h1);

  const MultiIndex i = grid.multi(node);
  push(grid.flat({i[0] - 1, i[1]}), w0);
  push(grid.flat({i[0] + 1, i[1]}), w0);
  push(grid.flat({i[0], i[1] - 1}), w1);
  push(grid.flat({i[0], i[1] + 1}), w1);
  if (cross > 0.0) {
    const double wd = cross / (h0 * h1);
    const int s = a12 > 0.0 ? 1 : -1;
    push(grid.flat({i[0] + 1, i[1] + s}), wd);
    push(grid.flat({i[0] - 1, i[1] - s}), wd);
  }
  return st;
}

double diffusion_term(const ScalarField& field, const DiffusionSpec& diff,
                      const MultiIndex& i) {
  const TorusGrid& g = field.grid();
  const std::size_t c = g.flat(i);
  const StencilWeights st = diffusion_stencil(g, c, diff.a(g.point(c)));
  double sum = 0.0;
  for (int k = 0; k < st.count; ++k) {
    sum += st.weights[k] * (field[st.nodes[k]] - field[c]);
  }
  return sum;
}

}  // namespace torushj
