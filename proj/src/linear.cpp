#include "torushj/linear.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace torushj {

GmresResult gmres(const LinearOperator& a, const Eigen::VectorXd& b,
                  const LinearOperator& m, int restart, double rtol,
                  int max_iterations) {
  const Eigen::Index n = b.size();
  GmresResult out;
  out.x = Eigen::VectorXd::Zero(n);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    out.relative_residual = 0.0;
    out.converged = true;
    return out;
  }
  auto precondition = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return m ? m(v) : v;
  };

  Eigen::VectorXd r = b;
  while (out.iterations < max_iterations) {
    const double beta = r.norm();
    out.relative_residual = beta / b_norm;
    if (out.relative_residual <= rtol) {
      out.converged = true;
      return out;
    }
    std::vector<Eigen::VectorXd> basis;
    basis.push_back(r / beta);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(restart + 1, restart);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(restart);
    Eigen::VectorXd sn = Eigen::VectorXd::Zero(restart);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(restart + 1);
    g[0] = beta;

    int k = 0;
    for (; k < restart && out.iterations < max_iterations; ++k) {
      ++out.iterations;
      Eigen::VectorXd w = a(precondition(basis[k]));
      for (int j = 0; j <= k; ++j) {
        hess(j, k) = w.dot(basis[j]);
        w -= hess(j, k) * basis[j];
      }
      hess(k + 1, k) = w.norm();
      for (int j = 0; j < k; ++j) {
        const double t = cs[j] * hess(j, k) + sn[j] * hess(j + 1, k);
        hess(j + 1, k) = -sn[j] * hess(j, k) + cs[j] * hess(j + 1, k);
        hess(j, k) = t;
      }
      const double denom = std::hypot(hess(k, k), hess(k + 1, k));
      cs[k] = denom == 0.0 ? 1.0 : hess(k, k) / denom;
      sn[k] = denom == 0.0 ? 0.0 : hess(k + 1, k) / denom;
      const double sub = hess(k + 1, k);
      hess(k, k) = cs[k] * hess(k, k) + sn[k] * sub;
      hess(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      out.relative_residual = std::abs(g[k + 1]) / b_norm;
      const bool breakdown = sub <= 1e-14 * beta;
      if (!breakdown) basis.push_back(w / sub);
      if (out.relative_residual <= rtol || breakdown) {
        ++k;
        break;
      }
    }
    const Eigen::VectorXd y = hess.topLeftCorner(k, k)
                                  .triangularView<Eigen::Upper>()
                                  .solve(g.head(k));
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < k; ++j) z += y[j] * basis[j];
    out.x += precondition(z);
    r = b - a(out.x);
    if (!r.allFinite()) {
      out.converged = false;
      return out;
    }
  }
  out.relative_residual = r.norm() / b_norm;
  out.converged = out.relative_residual <= rtol;
  return out;
}

}  // namespace torushj
