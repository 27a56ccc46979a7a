#include "smaq/bodyfat.hpp"

#include "smaq/error.hpp"
#include "smaq/parallel.hpp"
#include "smaq/rng.hpp"

#include <algorithm>
#include <optional>

namespace smaq {

BodyfatResult run_bodyfat(const Dataset& data, const BodyfatConfig& config) {
  if (config.splits < 1) throw ConfigError("splits must be at least 1");
  if (config.methods.empty()) throw ConfigError("no methods requested");
  if (config.taus.empty()) throw ConfigError("no tau values requested");
  if (config.bootstrap != 0 && config.bootstrap < 2) throw ConfigError("bootstrap needs at least 2 replications");
  for (Eigen::Index n_tr : config.n_tr) {
    if (n_tr <= 0 || n_tr >= data.n()) {
      throw ConfigError("training size " + std::to_string(n_tr) + " must lie strictly between 0 and " +
                        std::to_string(data.n()));
    }
  }
  for (double tau : config.taus) {
    FitConfig probe = config.fit;
    probe.tau = tau;
    validate(probe, data.p());
  }

  BodyfatResult res;
  res.predictor_names = data.predictor_names;

  struct Cell {
    Eigen::Index n_tr;
    double tau;
    Method method;
  };
  std::vector<Cell> cells;
  for (Method m : config.methods) {
    for (double tau : config.taus) {
      for (Eigen::Index n_tr : config.n_tr) {
        cells.push_back({n_tr, tau, m});
      }
    }
  }

  struct Outcome {
    std::optional<double> in, out;
    std::string error;
  };
  const auto splits = static_cast<std::size_t>(config.splits);
  std::vector<std::vector<Outcome>> outcomes(cells.size(), std::vector<Outcome>(splits));
  parallel_for(cells.size() * splits, config.threads, [&](std::size_t k) {
    const std::size_t c = k / splits;
    const std::size_t s = k % splits;
    const Cell& cell = cells[c];
    try {
      const Split sp = random_split(data, cell.n_tr, derive_seed(config.seed, StreamId::kSplit, s));
      FitConfig cfg = config.fit;
      cfg.tau = cell.tau;
      cfg.method = cell.method;
      cfg.threads = 1;
      cfg.cv_seed = derive_seed(config.seed, StreamId::kCrossValidation, s);
      const AveragingModel model = fit(sp.train, cfg);
      outcomes[c][s].in = evaluate_mpe(sp.train.y, model.training_predictions, cell.tau);
      outcomes[c][s].out = evaluate_mpe(sp.test.y, predict(model, sp.test.x), cell.tau);
    } catch (const std::exception& e) {
      outcomes[c][s].error = e.what();
    }
  });

  std::vector<std::string> over_limit;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SplitSummary row;
    row.n_tr = cells[c].n_tr;
    row.tau = cells[c].tau;
    row.method = cells[c].method;
    std::vector<double> in, out;
    for (std::size_t s = 0; s < splits; ++s) {
      const Outcome& o = outcomes[c][s];
      if (o.in && o.out) {
        in.push_back(*o.in);
        out.push_back(*o.out);
      } else {
        ++row.failed;
        res.failures.push_back(method_name(row.method) + " tau=" + std::to_string(row.tau) +
                               " n_tr=" + std::to_string(row.n_tr) + " split " + std::to_string(s) + ": " + o.error);
      }
    }
    row.used = static_cast<int>(in.size());
    row.mpe_in = summarize(in);
    row.mpe_out = summarize(out);
    if (row.failed > config.max_failure_rate * static_cast<double>(config.splits)) {
      over_limit.push_back(method_name(row.method) + " tau=" + std::to_string(row.tau) + " n_tr=" +
                           std::to_string(row.n_tr) + " (" + std::to_string(row.failed) + " of " +
                           std::to_string(config.splits) + " splits failed)");
    }
    res.prediction.push_back(row);
  }
  if (!over_limit.empty()) {
    std::string msg = "too many failed splits:";
    for (const auto& s : over_limit) msg += "\n  " + s;
    for (std::size_t k = 0; k < std::min<std::size_t>(res.failures.size(), 5); ++k) msg += "\n  " + res.failures[k];
    throw NumericalError(msg);
  }

  if (config.bootstrap > 0) {
    for (Method m : config.methods) {
      FitConfig cfg = config.fit;
      cfg.tau = config.weights_tau;
      cfg.method = m;
      cfg.threads = config.threads;
      cfg.cv_seed = derive_seed(config.seed, StreamId::kCrossValidation, splits);
      WeightSummary w;
      w.method = m;
      w.tau = config.weights_tau;
      w.weights = fit(data, cfg).weights;
      w.bootstrap = bootstrap_weight_se(data, cfg, config.bootstrap, derive_seed(config.seed, StreamId::kBootstrap, 0),
                                        config.threads);
      res.weights.push_back(std::move(w));
    }
  }
  return res;
}

}  // namespace smaq
