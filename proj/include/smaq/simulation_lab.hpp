#pragma once

#include "smaq/averaging_pipeline.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smaq {

enum class ErrorLaw { kSN, kT3, kMN };

std::string error_law_name(ErrorLaw law);  // "SN", "T3", "MN"
ErrorLaw parse_error_law(std::string_view name);

/// SN: N(0,1). T3: Student t with 3 df. MN: N(0,1) w.p. 0.95, N(0,100) w.p. 0.05.
Vector sample_error(ErrorLaw law, Eigen::Index n, std::uint64_t seed);

// Generators draw covariates from derive_seed(seed, kTrainCovariates, 0) and
// errors (or the Example-3 uniforms) from derive_seed(seed, kError, 0).

/// X ~ U(-2.5, 2.5)^p, Y = -sin(2 X1) + (X2^2 - 25/12) + X3 + (exp(-X4) - 0.4 sinh(2.5)) + e.
Dataset generate_example1(Eigen::Index n, Eigen::Index p, ErrorLaw error, std::uint64_t seed);

/// X_ij = (W_ij + t U_i) / (1 + t), Y = 3 m1 + 3 m2 + 2 m3 + 2 m4 + sqrt(1.74) e.
Dataset generate_example2(Eigen::Index n, Eigen::Index p, ErrorLaw error, double t, std::uint64_t seed);

/// X ~ U(0,1)^p and, with V ~ U(0,1),
/// Y = 1 + 2 X1 + 3 X2^2 - log(1 - X3) + Phi^-1(X4) + X5 + (1 + X5) Phi^-1(V) - X5 log(1 - V),
/// so the conditional tau-quantile is example3_quantile(x, tau).
Dataset generate_example3(Eigen::Index n, Eigen::Index p, std::uint64_t seed);

/// The response above for one covariate row and uniform draw v; increasing in v.
double example3_response(const Eigen::Ref<const Eigen::RowVectorXd>& x, double v);

/// 1 + Phi^-1(tau) + 2 x1 + 3 x2^2 - log(1 - x3) + Phi^-1(x4) + (1 + Phi^-1(tau) - log(1 - tau)) x5.
double example3_quantile(const Eigen::Ref<const Eigen::RowVectorXd>& x, double tau);
Vector example3_quantiles(const Matrix& x, double tau);

double example1_component(int j, double u);  // j = 1..4
double example2_component(int j, double u);  // j = 1..4

enum class Example { kEx1 = 1, kEx2 = 2, kEx3 = 3 };

/// Zero-based indices of the covariates carrying weight in the truth.
std::vector<int> true_support(Example ex);

struct SelectionMetrics {
  int c = 0;   // true zeros estimated zero
  int ic = 0;  // true nonzeros estimated zero
  bool cf = false;
};

SelectionMetrics selection_metrics(const WeightVector& weights, const std::vector<int>& truth, Eigen::Index p);

/// Half the mean absolute deviation between true and estimated quantiles.
double mean_estimation_error(const Vector& true_q, const Vector& est_q);

struct SimulationSpec {
  Example example = Example::kEx1;
  Eigen::Index n_tr = 200;
  Eigen::Index n_te = 100;
  ErrorLaw error = ErrorLaw::kSN;
  double tau = 0.5;
  int replications = 500;
  std::uint64_t seed = 1;
  double t = 1.0;          // Example-2 common-factor strength
  Eigen::Index p = 0;      // 0: floor(sqrt(n_tr))
  FitConfig fit;           // tau and method are overwritten per run
};

Eigen::Index resolved_p(const SimulationSpec& spec);

struct ReplicationResult {
  int c = 0;
  int ic = 0;
  bool cf = false;
  double mpe_in = 0.0;
  double mpe_out = 0.0;
  std::optional<double> mee_in;
  std::optional<double> mee_out;
};

/// Training and test sets of replication r.
std::pair<Dataset, Dataset> draw_replication(const SimulationSpec& spec, std::uint64_t r);

/// Fits one method on replication r and scores it.
ReplicationResult run_replication(const SimulationSpec& spec, Method method, std::uint64_t r);

struct Statistic {
  double mean = 0.0;
  double sd = 0.0;
};

struct SummaryRow {
  Method method = Method::kPSMAQP;
  double tau = 0.5;
  int used = 0;
  int failed = 0;
  Statistic c, ic, cf, mpe_in, mpe_out;
  std::optional<Statistic> mee_in, mee_out;
};

struct MonteCarloResult {
  SimulationSpec spec;
  std::vector<Method> methods;
  // outcomes[m][r]; empty when that fit failed
  std::vector<std::vector<std::optional<ReplicationResult>>> outcomes;
  std::vector<std::string> failures;
  std::vector<SummaryRow> summary;
};

Statistic summarize(const std::vector<double>& values);

/// Replications run in parallel; each draws from seeds derived from (spec.seed, r)
/// and is reduced in replication order, so output does not depend on threads.
MonteCarloResult run_monte_carlo(const SimulationSpec& spec, const std::vector<Method>& methods,
                                 int threads = 1);

}  // namespace smaq
