#pragma once

// Test-only reference computations. Nothing here shares code with the
// library's solvers: a dense tableau simplex for quantile regression,
// exhaustive enumeration of basic solutions, and plain grid scans.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

inline double rho(double u, double tau) { return u >= 0.0 ? tau * u : (tau - 1.0) * u; }

struct LpResult {
  double objective = 0.0;
  Eigen::VectorXd beta;
};

/// min sum tau u_i + (1 - tau) v_i  s.t.  X b+ - X b- + u - v = y, all >= 0.
/// Dense tableau, Bland's rule; the slack basis (u_i or v_i by the sign of
/// y_i) is feasible from the start.
inline LpResult quantile_regression_lp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       double tau) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::Index nv = 2 * d + 2 * n;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, nv + 1);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(nv);
  cost.segment(2 * d, n).setConstant(tau);
  cost.segment(2 * d + n, n).setConstant(1.0 - tau);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    t.block(i, 0, 1, d) = x.row(i);
    t.block(i, d, 1, d) = -x.row(i);
    t(i, 2 * d + i) = 1.0;
    t(i, 2 * d + n + i) = -1.0;
    t(i, nv) = y(i);
    if (y(i) < 0.0) {
      t.row(i) *= -1.0;
      basis[static_cast<std::size_t>(i)] = 2 * d + n + i;
    } else {
      basis[static_cast<std::size_t>(i)] = 2 * d + i;
    }
  }
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < nv; ++j) {
      double rc = cost(j);
      for (Eigen::Index i = 0; i < n; ++i) rc -= cost(basis[static_cast<std::size_t>(i)]) * t(i, j);
      if (rc < -1e-11) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (t(i, enter) > 1e-12) {
        const double ratio = t(i, nv) / t(i, enter);
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded; cannot happen for this LP
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  LpResult out;
  Eigen::VectorXd value = Eigen::VectorXd::Zero(nv);
  for (Eigen::Index i = 0; i < n; ++i) value(basis[static_cast<std::size_t>(i)]) = t(i, nv);
  out.beta = value.head(d) - value.segment(d, d);
  const Eigen::VectorXd r = y - x * out.beta;
  for (Eigen::Index i = 0; i < n; ++i) out.objective += rho(r(i), tau);
  return out;
}

/// Minimum of sum_i w_i rho_tau(y_i - a - b d_i) over all (a, b) through two
/// points with distinct d (the basic solutions of the 2-parameter problem).
inline double local_linear_bruteforce(const std::vector<double>& d, const std::vector<double>& y,
                                      const std::vector<double>& w, double tau) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t m = d.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = i + 1; k < m; ++k) {
      if (d[i] == d[k]) continue;
      const double b = (y[k] - y[i]) / (d[k] - d[i]);
      const double a = y[i] - b * d[i];
      double f = 0.0;
      for (std::size_t l = 0; l < m; ++l) f += w[l] * rho(y[l] - a - b * d[l], tau);
      best = std::min(best, f);
    }
  }
  return best;
}

inline double univariate_objective(const std::vector<double>& r, const std::vector<double>& d,
                                   double tau, double l1, double delta) {
  double f = l1 * std::abs(delta);
  for (std::size_t i = 0; i < r.size(); ++i) f += rho(r[i] - d[i] * delta, tau);
  return f;
}

/// Grid scan of the univariate objective on `points` equally spaced values
/// covering every breakpoint with a margin.
inline double univariate_grid_min(const std::vector<double>& r, const std::vector<double>& d,
                                  double tau, double l1, int points) {
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (d[i] == 0.0) continue;
    lo = std::min(lo, r[i] / d[i]);
    hi = std::max(hi, r[i] / d[i]);
  }
  lo -= 1.0;
  hi += 1.0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < points; ++k) {
    const double delta = lo + (hi - lo) * k / (points - 1);
    best = std::min(best, univariate_objective(r, d, tau, l1, delta));
  }
  return best;
}

/// Exact minimum over the breakpoint set {r_i / d_i} U {0}.
inline double univariate_breakpoint_min(const std::vector<double>& r,
                                        const std::vector<double>& d, double tau, double l1) {
  double best = univariate_objective(r, d, tau, l1, 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (d[i] != 0.0) best = std::min(best, univariate_objective(r, d, tau, l1, r[i] / d[i]));
  }
  return best;
}

}  // namespace oracle
