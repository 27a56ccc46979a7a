#pragma once

#include "smaq/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace smaq {

/// Check (pinball) loss rho_tau(u) = u (tau - I(u < 0)).
double check_loss(double u, double tau);

/// Sum of check losses of a residual vector.
double check_loss_sum(const Vector& residuals, double tau);

/// SCAD penalty p_lambda with shape parameter a > 2.
struct ScadPenalty {
  double lambda = 0.0;
  double a = 3.7;
};

double scad_value(double x, const ScadPenalty& pen);
double scad_derivative(double x, const ScadPenalty& pen);

/// Intercept w0 plus p slopes. The support is every slope with
/// |w_j| > kSupportThreshold; solvers snap smaller entries to exactly 0.
struct WeightVector {
  static constexpr double kSupportThreshold = 1e-8;

  double intercept = 0.0;
  Vector slopes;

  std::vector<int> support() const;  // zero-based indices
  int df() const { return static_cast<int>(support().size()); }
  static WeightVector zeros(Eigen::Index p) { return {0.0, Vector::Zero(p)}; }
};

struct SolverOptions {
  double tolerance = 1e-6;   // max coordinate change ending a sweep loop
  int max_sweeps = 200;
  bool polish = true;        // exact vertex descent on the LLA majorizer
};

struct SolverReport {
  std::vector<double> objective_trace;  // one entry per sweep (and polish)
  int sweeps = 0;
  bool converged = false;
  double final_objective = 0.0;
};

struct PenalizedFit {
  WeightVector weights;
  SolverReport report;
};

/// Exact minimizer over delta of
///   sum_i rho_tau(r_i - d_i delta) + l1_weight |delta|.
/// Flat minimum sets resolve toward 0. Throws NumericalError
/// ("dead coordinate") when every multiplier is zero.
double weighted_univariate_quantile_min(std::span<const double> residuals,
                                        std::span<const double> multipliers, double tau,
                                        double l1_weight);

/// Objective Q_n(w) = sum_i rho_tau(y_i - w0 - M_i' w) + n sum_j p_lambda(|w_j|).
double penalized_quantile_objective(const Matrix& design, const Vector& y, double tau,
                                    const ScadPenalty& pen, const WeightVector& w);

/// Cyclic coordinate descent with per-coordinate local linear approximation
/// of SCAD, followed by exact vertex descent on the majorized problem
/// whenever the sweeps stall. Never throws on non-convergence.
PenalizedFit solve_penalized_quantile(const Matrix& design, const Vector& y, double tau,
                                      const ScadPenalty& pen, const WeightVector& init,
                                      const SolverOptions& options = {});

/// max_j |n^-1 sum_i M_ij psi_tau(y_i - q_tau(y))|: the smallest lambda for
/// which w = 0 is stationary.
double quantile_lambda_max(const Matrix& design, const Vector& y, double tau);

/// `size` log-spaced values from lambda_max * min_ratio to lambda_max, ascending.
std::vector<double> log_spaced_grid(double lambda_max, int size, double min_ratio);

enum class CnRule { kOne, kLogP };
double cn_value(CnRule rule, Eigen::Index p);

/// What MSIC takes the log of: the check-loss sum alone, or the loss plus
/// the n * sum p_lambda penalty.
enum class MsicObjective { kLoss, kPenalized };

struct MsicSelection {
  std::vector<double> lambda_grid;
  std::vector<double> msic_values;
  std::vector<int> df_per_lambda;
  double chosen_lambda = 0.0;
  double chosen_msic = 0.0;
  WeightVector chosen_weights;
  SolverReport chosen_report;
  double cn = 1.0;
};

/// MSIC(lambda) = log Q(w_lambda) + df C_n log(n) / (2n), minimized over an
/// ascending grid. The path is solved from the largest lambda down with warm
/// starts; ties go to the smaller lambda.
MsicSelection select_lambda_msic(const Matrix& design, const Vector& y, double tau,
                                 const std::vector<double>& grid, double cn, double scad_a = 3.7,
                                 const SolverOptions& options = {},
                                 MsicObjective objective = MsicObjective::kLoss);

// ---- least-squares baseline ------------------------------------------------

struct LeastSquaresOptions {
  double tolerance = 1e-10;
  int max_sweeps = 10000;
};

/// SCAD-penalized least squares, (2n)^-1 ||y - w0 - M w||^2 + sum p_lambda(|w_j|),
/// with the penalty applied on standardized columns. Coordinate descent with
/// closed-form SCAD thresholding.
PenalizedFit solve_penalized_least_squares(const Matrix& design, const Vector& y,
                                           const ScadPenalty& pen,
                                           const WeightVector* warm_start = nullptr,
                                           const LeastSquaresOptions& options = {});

double least_squares_lambda_max(const Matrix& design, const Vector& y);

struct CvSelection {
  std::vector<double> lambda_grid;
  std::vector<double> cv_error;
  double chosen_lambda = 0.0;
  WeightVector chosen_weights;
  SolverReport chosen_report;
};

/// K-fold cross-validation on squared prediction error; folds are a seeded
/// random partition of the rows.
CvSelection select_lambda_cv(const Matrix& design, const Vector& y,
                             const std::vector<double>& grid, int folds, std::uint64_t seed,
                             double scad_a = 3.7, const LeastSquaresOptions& options = {});

}  // namespace smaq
