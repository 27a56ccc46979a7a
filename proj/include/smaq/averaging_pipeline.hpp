#pragma once

#include "smaq/marginal_smoother.hpp"
#include "smaq/penalized_solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smaq {

/// SMAQP / PSMAQP: quantile marginals, check-loss weights (unpenalized / SCAD + MSIC).
/// SMAMP / PSMAMP: mean marginals, least-squares weights (unpenalized / SCAD + CV).
enum class Method { kSMAQP, kPSMAQP, kSMAMP, kPSMAMP };

std::string method_name(Method m);
Method parse_method(std::string_view name);  // case-insensitive, throws ConfigError
bool is_quantile_method(Method m);
bool is_penalized_method(Method m);

struct FitConfig {
  double tau = 0.5;
  Method method = Method::kPSMAQP;
  CnRule cn_rule = CnRule::kLogP;
  MsicObjective msic_objective = MsicObjective::kLoss;
  PilotRule pilot_rule = PilotRule::kRuleOfThumb;
  std::vector<double> bandwidth_overrides;  // final bandwidths, empty or size p
  std::vector<double> covariate_taus;       // per-covariate smoothing levels, empty or size p
  double scad_a = 3.7;
  int grid_size = 50;
  double grid_min_ratio = 1e-3;
  SolverOptions solver;
  LeastSquaresOptions least_squares;
  int cv_folds = 5;
  std::uint64_t cv_seed = 0;
  EvaluationMode evaluation = EvaluationMode::kRefit;
  int threads = 1;
};

/// Throws ConfigError naming the first out-of-domain field. Pass p < 0 to
/// skip the per-covariate length checks.
void validate(const FitConfig& config, Eigen::Index p = -1);

struct AveragingModel {
  FitConfig config;
  std::vector<MarginalModel> marginals;
  WeightVector weights;
  std::optional<MsicSelection> msic;
  std::optional<CvSelection> cv;
  SolverReport report;
  Vector training_predictions;

  Eigen::Index p() const { return static_cast<Eigen::Index>(marginals.size()); }
};

AveragingModel fit(const Dataset& train, const FitConfig& config);

/// w0 + sum_j w_j m_j(x_j) for every row. Coordinates with w_j = 0 are not evaluated.
Vector predict(const AveragingModel& model, const Matrix& x_new);

/// Mean check loss over the entries.
double evaluate_mpe(const Vector& y, const Vector& yhat, double tau);

struct PredictionReport {
  Vector predictions;
  double mpe = 0.0;
  Eigen::Index n_eval = 0;
};

/// Predicts data.x and scores against data.y at the model's tau.
PredictionReport evaluate(const AveragingModel& model, const Dataset& data);

struct BootstrapResult {
  Vector standard_errors;  // intercept first, then w_1..w_p
  Matrix replicates;       // one row per successful resample
  int requested = 0;
  int skipped = 0;
  int retried = 0;
};

/// Nonparametric bootstrap: each resample redraws n rows with replacement and
/// refits everything. A failing resample is redrawn once, then skipped.
BootstrapResult bootstrap_weight_se(const Dataset& train, const FitConfig& config, int replications,
                                    std::uint64_t seed, int threads = 1);

}  // namespace smaq
