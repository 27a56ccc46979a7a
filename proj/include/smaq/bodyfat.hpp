#pragma once

#include "smaq/averaging_pipeline.hpp"
#include "smaq/csv.hpp"
#include "smaq/simulation_lab.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace smaq {

struct BodyfatConfig {
  std::vector<Eigen::Index> n_tr{150};
  int splits = 500;
  std::vector<double> taus{0.5};
  std::vector<Method> methods{Method::kSMAMP, Method::kPSMAMP, Method::kSMAQP, Method::kPSMAQP};
  int bootstrap = 500;      // replications for weight standard errors; 0 skips the weight table
  double weights_tau = 0.5;
  std::uint64_t seed = 1;
  FitConfig fit;            // tau and method are overwritten per cell
  int threads = 1;
  double max_failure_rate = 0.01;
};

struct SplitSummary {
  Eigen::Index n_tr = 0;
  double tau = 0.5;
  Method method = Method::kPSMAQP;
  int used = 0;
  int failed = 0;
  Statistic mpe_in, mpe_out;
};

struct WeightSummary {
  Method method = Method::kPSMAQP;
  double tau = 0.5;
  WeightVector weights;
  BootstrapResult bootstrap;
};

struct BodyfatResult {
  std::vector<std::string> predictor_names;
  std::vector<SplitSummary> prediction;
  std::vector<WeightSummary> weights;
  std::vector<std::string> failures;
};

/// Repeated random splits (split s uses derive_seed(seed, kSplit, s), shared by
/// every method and tau) plus full-sample weights with bootstrap standard errors.
/// Throws NumericalError when any cell loses more than max_failure_rate of its splits.
BodyfatResult run_bodyfat(const Dataset& data, const BodyfatConfig& config);

}  // namespace smaq
