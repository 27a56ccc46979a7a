#include "smaq/averaging_pipeline.hpp"

#include "smaq/error.hpp"
#include "smaq/parallel.hpp"
#include "smaq/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

namespace smaq {

namespace {

template <class Fn>
auto with_context(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const BandwidthError& e) {
    throw BandwidthError(where + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(where + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::kSMAQP: return "SMAQP";
    case Method::kPSMAQP: return "PSMAQP";
    case Method::kSMAMP: return "SMAMP";
    case Method::kPSMAMP: return "PSMAMP";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string up(name);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Method m : {Method::kSMAQP, Method::kPSMAQP, Method::kSMAMP, Method::kPSMAMP}) {
    if (method_name(m) == up) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_quantile_method(Method m) { return m == Method::kSMAQP || m == Method::kPSMAQP; }
bool is_penalized_method(Method m) { return m == Method::kPSMAQP || m == Method::kPSMAMP; }

void validate(const FitConfig& c, Eigen::Index p) {
  if (!(c.tau > 0.0 && c.tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (!(c.scad_a > 2.0)) throw ConfigError("SCAD a must exceed 2");
  if (c.grid_size < 1) throw ConfigError("grid_size must be at least 1");
  if (!(c.grid_min_ratio > 0.0 && c.grid_min_ratio <= 1.0)) throw ConfigError("grid_min_ratio must lie in (0, 1]");
  if (!(c.solver.tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (c.solver.max_sweeps < 1) throw ConfigError("solver max_sweeps must be at least 1");
  if (!(c.least_squares.tolerance > 0.0)) throw ConfigError("least-squares tolerance must be positive");
  if (c.least_squares.max_sweeps < 1) throw ConfigError("least-squares max_sweeps must be at least 1");
  if (c.cv_folds < 2) throw ConfigError("cv_folds must be at least 2");
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  for (double h : c.bandwidth_overrides) {
    if (!(h > 0.0 && std::isfinite(h))) throw ConfigError("bandwidth overrides must be positive");
  }
  for (double t : c.covariate_taus) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("covariate taus must lie in (0, 1)");
  }
  if (p >= 0) {
    if (!c.bandwidth_overrides.empty() && static_cast<Eigen::Index>(c.bandwidth_overrides.size()) != p) {
      throw ConfigError("bandwidth overrides must have one entry per covariate");
    }
    if (!c.covariate_taus.empty() && static_cast<Eigen::Index>(c.covariate_taus.size()) != p) {
      throw ConfigError("covariate taus must have one entry per covariate");
    }
  }
}

AveragingModel fit(const Dataset& train, const FitConfig& config) {
  validate(config, train.p());
  if (train.p() < 1) throw DataError("need at least one predictor");
  if (train.n() < 50) throw DataError("need at least 50 training rows, got " + std::to_string(train.n()));
  if (train.y.size() != train.n()) throw DataError("response length does not match predictor rows");
  if (!train.x.allFinite() || !train.y.allFinite()) throw DataError("training data contain non-finite values");

  const bool quantile = is_quantile_method(config.method);
  const SmootherLoss loss = quantile ? SmootherLoss::kQuantile : SmootherLoss::kMean;

  AveragingModel model;
  model.config = config;
  MarginalFit marg = with_context("marginal stage", [&] {
    const BandwidthPlan plan =
        make_bandwidth_plan(train, config.tau, loss, config.pilot_rule, config.covariate_taus,
                            config.bandwidth_overrides);
    return build_marginal_models(train, plan, loss, config.threads);
  });
  model.marginals = std::move(marg.models);
  const Matrix& design = marg.fitted;

  with_context("weight stage", [&] {
    const Eigen::Index p = design.cols();
    switch (config.method) {
      case Method::kSMAQP: {
        PenalizedFit f = solve_penalized_quantile(design, train.y, config.tau, ScadPenalty{0.0, config.scad_a},
                                                  WeightVector::zeros(p), config.solver);
        model.weights = std::move(f.weights);
        model.report = std::move(f.report);
        break;
      }
      case Method::kPSMAQP: {
        const double lmax = quantile_lambda_max(design, train.y, config.tau);
        const auto grid = log_spaced_grid(lmax, config.grid_size, config.grid_min_ratio);
        MsicSelection sel = select_lambda_msic(design, train.y, config.tau, grid, cn_value(config.cn_rule, p),
                                               config.scad_a, config.solver, config.msic_objective);
        model.weights = sel.chosen_weights;
        model.report = sel.chosen_report;
        model.msic = std::move(sel);
        break;
      }
      case Method::kSMAMP: {
        PenalizedFit f = solve_penalized_least_squares(design, train.y, ScadPenalty{0.0, config.scad_a}, nullptr,
                                                       config.least_squares);
        model.weights = std::move(f.weights);
        model.report = std::move(f.report);
        break;
      }
      case Method::kPSMAMP: {
        const double lmax = least_squares_lambda_max(design, train.y);
        const auto grid = log_spaced_grid(lmax, config.grid_size, config.grid_min_ratio);
        const int folds = static_cast<int>(std::min<Eigen::Index>(config.cv_folds, train.n()));
        CvSelection sel = select_lambda_cv(design, train.y, grid, folds, config.cv_seed, config.scad_a,
                                           config.least_squares);
        model.weights = sel.chosen_weights;
        model.report = sel.chosen_report;
        model.cv = std::move(sel);
        break;
      }
    }
  });

  model.training_predictions =
      (design * model.weights.slopes).array() + model.weights.intercept;
  return model;
}

Vector predict(const AveragingModel& model, const Matrix& x_new) {
  const Eigen::Index p = model.p();
  if (x_new.cols() != p) {
    throw DataError("prediction input has " + std::to_string(x_new.cols()) + " columns, model expects " +
                    std::to_string(p));
  }
  const Eigen::Index m = x_new.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!x_new.row(i).allFinite()) throw DataError("non-finite value in prediction row " + std::to_string(i + 1));
  }
  const auto active = model.weights.support();
  Vector out(m);
  const EvaluationMode mode = model.config.evaluation;
  parallel_for(static_cast<std::size_t>(m), model.config.threads, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    double v = model.weights.intercept;
    for (int j : active) {
      v += model.weights.slopes(j) * model.marginals[static_cast<std::size_t>(j)].evaluate(x_new(r, j), mode);
    }
    out(r) = v;
  });
  return out;
}

double evaluate_mpe(const Vector& y, const Vector& yhat, double tau) {
  if (y.size() == 0) throw DataError("MPE needs at least one observation");
  if (y.size() != yhat.size()) throw DataError("MPE inputs differ in length");
  return check_loss_sum(y - yhat, tau) / static_cast<double>(y.size());
}

PredictionReport evaluate(const AveragingModel& model, const Dataset& data) {
  PredictionReport rep;
  rep.predictions = predict(model, data.x);
  rep.mpe = evaluate_mpe(data.y, rep.predictions, model.config.tau);
  rep.n_eval = data.n();
  return rep;
}

BootstrapResult bootstrap_weight_se(const Dataset& train, const FitConfig& config, int replications,
                                    std::uint64_t seed, int threads) {
  if (replications < 2) throw ConfigError("bootstrap needs at least 2 replications");
  validate(config, train.p());
  const Eigen::Index n = train.n();
  const Eigen::Index p = train.p();
  FitConfig inner = config;
  inner.threads = 1;

  auto resample = [&](StreamId stream, std::uint64_t b) {
    Rng rng(derive_seed(seed, stream, b));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (auto& i : idx) i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    return train.rows(idx);
  };

  struct Slot {
    std::optional<Vector> coef;
    bool retried = false;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(replications));
  parallel_for(slots.size(), threads, [&](std::size_t b) {
    for (StreamId stream : {StreamId::kBootstrap, StreamId::kBootstrapRetry}) {
      try {
        const AveragingModel m = fit(resample(stream, b), inner);
        Vector c(p + 1);
        c(0) = m.weights.intercept;
        c.tail(p) = m.weights.slopes;
        slots[b].coef = std::move(c);
        return;
      } catch (const DataError&) {
      } catch (const NumericalError&) {
      }
      slots[b].retried = true;
    }
  });

  BootstrapResult res;
  res.requested = replications;
  std::vector<const Vector*> ok;
  for (const auto& s : slots) {
    if (s.coef) ok.push_back(&*s.coef);
    else ++res.skipped;
    if (s.retried) ++res.retried;
  }
  res.replicates.resize(static_cast<Eigen::Index>(ok.size()), p + 1);
  for (std::size_t k = 0; k < ok.size(); ++k) res.replicates.row(static_cast<Eigen::Index>(k)) = ok[k]->transpose();
  if (ok.size() < 2) throw NumericalError("bootstrap produced fewer than 2 successful refits");
  const Eigen::RowVectorXd mean = res.replicates.colwise().mean();
  const Matrix centered = res.replicates.rowwise() - mean;
  res.standard_errors =
      (centered.colwise().squaredNorm() / static_cast<double>(ok.size() - 1)).cwiseSqrt().transpose();
  return res;
}

}  // namespace smaq
