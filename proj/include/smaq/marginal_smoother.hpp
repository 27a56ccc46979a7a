#pragma once

#include "smaq/error.hpp"
#include "smaq/types.hpp"

#include <span>
#include <vector>

namespace smaq {

/// K(u) = 0.75 (1 - u^2) on [-1, 1], zero elsewhere.
double epanechnikov(double u);

/// Normal-reference rule h_ls = 1.06 sd(x) n^(-1/5); sd uses the n - 1 divisor.
double pilot_bandwidth(std::span<const double> x);

/// Curvature-based rule of thumb for the local linear mean fit of y on x:
///   h = {15 sigma^2 (max x - min x) / sum_i m''(x_i)^2}^(1/5),
/// with m'' and sigma^2 taken from a global quartic least-squares fit.
/// Capped at twice the covariate range; falls back to pilot_bandwidth when
/// the quartic fits exactly.
double rule_of_thumb_bandwidth(std::span<const double> x, std::span<const double> y);

enum class PilotRule { kNormalReference, kRuleOfThumb };

/// h = h_ls {tau (1 - tau) / phi(Phi^-1(tau))}^(1/5).
double quantile_bandwidth(double h_ls, double tau);

/// Raised when fewer than two distinct covariate values carry kernel weight.
class BandwidthError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

struct LocalFit {
  double level = 0.0;
  double slope = 0.0;
};

/// Local linear quantile fit at x0: exact minimizer (a, b) of
///   sum_i rho_tau(y_i - a - b (x_i - x0)) K((x_i - x0) / h).
LocalFit fit_local_linear_quantile(std::span<const double> x, std::span<const double> y,
                                   double tau, double h, double x0);

/// Kernel-weighted least-squares counterpart of the above.
LocalFit fit_local_linear_mean(std::span<const double> x, std::span<const double> y, double h,
                               double x0);

enum class SmootherLoss { kQuantile, kMean };

/// How a fitted marginal is evaluated at points inside its support.
enum class EvaluationMode { kRefit, kInterpolate };

/// One covariate's fitted marginal curve m_j. Keeps the sorted training pairs
/// so it can refit at new points without the original dataset. Immutable.
class MarginalModel {
public:
  /// Sorts (x, y) by x and fits at every training point.
  MarginalModel(int column, SmootherLoss loss, double tau, double bandwidth,
                std::span<const double> x, std::span<const double> y);

  /// Restores a model from stored state (no refitting).
  MarginalModel(int column, SmootherLoss loss, double tau, double bandwidth,
                std::vector<double> knots, std::vector<double> responses,
                std::vector<double> levels, std::vector<double> slopes);

  int column() const { return column_; }
  SmootherLoss loss() const { return loss_; }
  double tau() const { return tau_; }
  double bandwidth() const { return bandwidth_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& responses() const { return responses_; }
  const std::vector<double>& fitted_levels() const { return levels_; }
  const std::vector<double>& fitted_slopes() const { return slopes_; }
  double support_min() const { return knots_.front(); }
  double support_max() const { return knots_.back(); }

  /// m_j(x). Outside the support: boundary level + boundary slope * overshoot.
  double evaluate(double x, EvaluationMode mode = EvaluationMode::kRefit) const;

  /// Local fit at x0, doubling the bandwidth (at most 5 times) when the
  /// kernel window holds fewer than two distinct points.
  LocalFit fit_at(double x0) const;

private:
  int column_;
  SmootherLoss loss_;
  double tau_;
  double bandwidth_;
  std::vector<double> knots_;
  std::vector<double> responses_;
  std::vector<double> levels_;
  std::vector<double> slopes_;
};

/// Per-covariate pilot bandwidth, final bandwidth and quantile level.
struct BandwidthPlan {
  Vector pilot;
  Vector bandwidth;
  Vector tau;
};

/// Pilot rule per column; quantile losses apply the tau adjustment, the mean
/// loss uses the pilot directly. `covariate_taus` may be empty (use `tau`),
/// and `overrides` (empty or size p) replaces final bandwidths.
BandwidthPlan make_bandwidth_plan(const Dataset& data, double tau, SmootherLoss loss,
                                  PilotRule rule = PilotRule::kRuleOfThumb,
                                  const std::vector<double>& covariate_taus = {},
                                  const std::vector<double>& overrides = {});

struct MarginalFit {
  std::vector<MarginalModel> models;
  Matrix fitted;  // fitted(i, j) = m_j(X_ij)
};

MarginalFit build_marginal_models(const Dataset& data, const BandwidthPlan& plan,
                                  SmootherLoss loss, int threads = 1);

}  // namespace smaq
