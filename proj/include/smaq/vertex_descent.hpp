#pragma once

#include "smaq/types.hpp"

namespace smaq {

/// Exact minimizer of the convex piecewise-linear objective
///
///   F(beta) = sum_i rho_tau(y_i - x_i' beta) + sum_j c_j |beta_j|
///
/// by walking vertices of the hyperplane arrangement: an exact line search
/// reaches a vertex, then simplex-style pivots (drop the constraint whose
/// dual value leaves its interval, line-search along the freed edge) until
/// the dual certificate holds. Row weights can be folded into x and y
/// because rho_tau is positively homogeneous.
struct VertexDescentResult {
  Vector beta;
  double objective = 0.0;
  int pivots = 0;
  bool certified = false;  // dual certificate verified at the returned point
};

VertexDescentResult minimize_weighted_l1(const Matrix& design, const Vector& response,
                                         double tau, const Vector& penalty,
                                         const Vector& start, int max_pivots = 0);

/// F evaluated directly.
double weighted_l1_objective(const Matrix& design, const Vector& response, double tau,
                             const Vector& penalty, const Vector& beta);

}  // namespace smaq
