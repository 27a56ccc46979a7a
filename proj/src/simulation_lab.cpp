#include "smaq/simulation_lab.hpp"

#include "smaq/error.hpp"
#include "smaq/normal.hpp"
#include "smaq/parallel.hpp"
#include "smaq/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace smaq {

std::string error_law_name(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::kSN: return "SN";
    case ErrorLaw::kT3: return "T3";
    case ErrorLaw::kMN: return "MN";
  }
  return "?";
}

ErrorLaw parse_error_law(std::string_view name) {
  std::string up(name);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (ErrorLaw law : {ErrorLaw::kSN, ErrorLaw::kT3, ErrorLaw::kMN}) {
    if (error_law_name(law) == up) return law;
  }
  throw ConfigError("unknown error law '" + std::string(name) + "' (expected sn, t3 or mn)");
}

Vector sample_error(ErrorLaw law, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("error sample size must be positive");
  Rng rng(seed);
  Vector e(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (law) {
      case ErrorLaw::kSN: e(i) = rng.normal(); break;
      case ErrorLaw::kT3: e(i) = rng.student_t(3); break;
      case ErrorLaw::kMN: {
        const bool wide = rng.uniform() < 0.05;
        e(i) = (wide ? 10.0 : 1.0) * rng.normal();
        break;
      }
    }
  }
  return e;
}

double example1_component(int j, double u) {
  switch (j) {
    case 1: return -std::sin(2.0 * u);
    case 2: return u * u - 25.0 / 12.0;
    case 3: return u;
    case 4: return std::exp(-u) - 0.4 * std::sinh(2.5);
  }
  throw ConfigError("example 1 has components 1..4");
}

double example2_component(int j, double u) {
  const double s = std::sin(2.0 * std::numbers::pi * u);
  const double c = std::cos(2.0 * std::numbers::pi * u);
  switch (j) {
    case 1: return 2.0 * u;
    case 2: return (2.0 * u - 1.0) * (2.0 * u - 1.0);
    case 3: return s / (2.0 - s);
    case 4: return 0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c * c * c + 0.5 * s * s * s;
  }
  throw ConfigError("example 2 has components 1..4");
}

namespace {

void check_shape(Eigen::Index n, Eigen::Index p, Eigen::Index min_p) {
  if (n < 1) throw ConfigError("sample size must be positive");
  if (p < min_p) throw ConfigError("this example needs p >= " + std::to_string(min_p));
}

Dataset named(Matrix x, Vector y) {
  Dataset d;
  d.predictor_names.reserve(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) d.predictor_names.push_back("X" + std::to_string(j + 1));
  d.response_name = "Y";
  d.x = std::move(x);
  d.y = std::move(y);
  return d;
}

}  // namespace

Dataset generate_example1(Eigen::Index n, Eigen::Index p, ErrorLaw error, std::uint64_t seed) {
  check_shape(n, p, 4);
  Rng rng(derive_seed(seed, StreamId::kTrainCovariates, 0));
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.uniform(-2.5, 2.5);
  }
  Vector y = sample_error(error, n, derive_seed(seed, StreamId::kError, 0));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 1; j <= 4; ++j) y(i) += example1_component(j, x(i, j - 1));
  }
  return named(std::move(x), std::move(y));
}

Dataset generate_example2(Eigen::Index n, Eigen::Index p, ErrorLaw error, double t, std::uint64_t seed) {
  check_shape(n, p, 4);
  if (!(t >= 0.0)) throw ConfigError("example 2 needs t >= 0");
  Rng rng(derive_seed(seed, StreamId::kTrainCovariates, 0));
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = (rng.uniform() + t * u) / (1.0 + t);
  }
  const Vector e = sample_error(error, n, derive_seed(seed, StreamId::kError, 0));
  const double coef[4] = {3.0, 3.0, 2.0, 2.0};
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = std::sqrt(1.74) * e(i);
    for (int j = 1; j <= 4; ++j) v += coef[j - 1] * example2_component(j, x(i, j - 1));
    y(i) = v;
  }
  return named(std::move(x), std::move(y));
}

Dataset generate_example3(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  check_shape(n, p, 5);
  Rng rng(derive_seed(seed, StreamId::kTrainCovariates, 0));
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rng.uniform();
  }
  Rng urng(derive_seed(seed, StreamId::kError, 0));
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = example3_response(x.row(i), urng.uniform());
  return named(std::move(x), std::move(y));
}

double example3_response(const Eigen::Ref<const Eigen::RowVectorXd>& x, double v) {
  if (x.size() < 5) throw DataError("example 3 needs at least 5 covariates");
  const double x5 = x(4);
  return 1.0 + 2.0 * x(0) + 3.0 * x(1) * x(1) - std::log1p(-x(2)) + normal_quantile(x(3)) + x5 +
         (1.0 + x5) * normal_quantile(v) - x5 * std::log1p(-v);
}

double example3_quantile(const Eigen::Ref<const Eigen::RowVectorXd>& x, double tau) {
  if (x.size() < 5) throw DataError("example 3 quantile needs at least 5 covariates");
  const double z = normal_quantile(tau);
  return 1.0 + z + 2.0 * x(0) + 3.0 * x(1) * x(1) - std::log1p(-x(2)) + normal_quantile(x(3)) +
         (1.0 + z - std::log1p(-tau)) * x(4);
}

Vector example3_quantiles(const Matrix& x, double tau) {
  Vector q(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) q(i) = example3_quantile(x.row(i), tau);
  return q;
}

std::vector<int> true_support(Example ex) {
  if (ex == Example::kEx3) return {0, 1, 2, 3, 4};
  return {0, 1, 2, 3};
}

SelectionMetrics selection_metrics(const WeightVector& weights, const std::vector<int>& truth, Eigen::Index p) {
  if (weights.slopes.size() != p) throw DataError("weight vector length differs from p");
  std::vector<bool> in_truth(static_cast<std::size_t>(p), false);
  for (int j : truth) {
    if (j < 0 || j >= p) throw ConfigError("true support index out of range");
    in_truth[static_cast<std::size_t>(j)] = true;
  }
  SelectionMetrics m;
  for (Eigen::Index j = 0; j < p; ++j) {
    const bool zero = std::abs(weights.slopes(j)) <= WeightVector::kSupportThreshold;
    if (zero && in_truth[static_cast<std::size_t>(j)]) ++m.ic;
    if (zero && !in_truth[static_cast<std::size_t>(j)]) ++m.c;
  }
  const int s = static_cast<int>(truth.size());
  m.cf = m.ic == 0 && m.c == static_cast<int>(p) - s;
  return m;
}

double mean_estimation_error(const Vector& true_q, const Vector& est_q) {
  if (true_q.size() == 0) throw DataError("MEE needs at least one point");
  if (true_q.size() != est_q.size()) throw DataError("MEE inputs differ in length");
  return 0.5 * (true_q - est_q).cwiseAbs().mean();
}

Eigen::Index resolved_p(const SimulationSpec& spec) {
  if (spec.p > 0) return spec.p;
  auto p = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(spec.n_tr))));
  while ((p + 1) * (p + 1) <= spec.n_tr) ++p;
  while (p * p > spec.n_tr) --p;
  return p;
}

std::pair<Dataset, Dataset> draw_replication(const SimulationSpec& spec, std::uint64_t r) {
  const Eigen::Index p = resolved_p(spec);
  const std::uint64_t train_seed = derive_seed(spec.seed, StreamId::kTrainCovariates, r);
  const std::uint64_t test_seed = derive_seed(spec.seed, StreamId::kTestCovariates, r);
  switch (spec.example) {
    case Example::kEx1:
      return {generate_example1(spec.n_tr, p, spec.error, train_seed),
              generate_example1(spec.n_te, p, spec.error, test_seed)};
    case Example::kEx2:
      return {generate_example2(spec.n_tr, p, spec.error, spec.t, train_seed),
              generate_example2(spec.n_te, p, spec.error, spec.t, test_seed)};
    case Example::kEx3:
      return {generate_example3(spec.n_tr, p, train_seed), generate_example3(spec.n_te, p, test_seed)};
  }
  throw ConfigError("unknown example");
}

ReplicationResult run_replication(const SimulationSpec& spec, Method method, std::uint64_t r) {
  auto [train, test] = draw_replication(spec, r);
  FitConfig cfg = spec.fit;
  cfg.tau = spec.tau;
  cfg.method = method;
  cfg.threads = 1;
  cfg.cv_seed = derive_seed(spec.seed, StreamId::kCrossValidation, r);
  const AveragingModel model = fit(train, cfg);
  const Vector pred_out = predict(model, test.x);

  ReplicationResult out;
  const SelectionMetrics sm = selection_metrics(model.weights, true_support(spec.example), train.p());
  out.c = sm.c;
  out.ic = sm.ic;
  out.cf = sm.cf;
  out.mpe_in = evaluate_mpe(train.y, model.training_predictions, spec.tau);
  out.mpe_out = evaluate_mpe(test.y, pred_out, spec.tau);
  if (spec.example == Example::kEx3) {
    out.mee_in = mean_estimation_error(example3_quantiles(train.x, spec.tau), model.training_predictions);
    out.mee_out = mean_estimation_error(example3_quantiles(test.x, spec.tau), pred_out);
  }
  return out;
}

Statistic summarize(const std::vector<double>& v) {
  Statistic s;
  if (v.empty()) return {std::nan(""), std::nan("")};
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

MonteCarloResult run_monte_carlo(const SimulationSpec& spec, const std::vector<Method>& methods, int threads) {
  if (spec.replications < 2) throw ConfigError("replications must be at least 2");
  if (spec.n_tr < 50) throw ConfigError("n_tr must be at least 50");
  if (spec.n_te < 1) throw ConfigError("n_te must be positive");
  if (methods.empty()) throw ConfigError("no methods requested");
  FitConfig probe = spec.fit;
  probe.tau = spec.tau;
  validate(probe);
  const Eigen::Index p = resolved_p(spec);
  if (p < (spec.example == Example::kEx3 ? 5 : 4)) throw ConfigError("p too small for this example");

  MonteCarloResult res;
  res.spec = spec;
  res.methods = methods;
  const auto reps = static_cast<std::size_t>(spec.replications);
  res.outcomes.assign(methods.size(), std::vector<std::optional<ReplicationResult>>(reps));
  std::vector<std::vector<std::string>> errors(methods.size(), std::vector<std::string>(reps));

  const std::size_t tasks = reps * methods.size();
  parallel_for(tasks, threads, [&](std::size_t k) {
    const std::size_t r = k / methods.size();
    const std::size_t m = k % methods.size();
    try {
      res.outcomes[m][r] = run_replication(spec, methods[m], r);
    } catch (const std::exception& e) {
      errors[m][r] = e.what();
    }
  });

  for (std::size_t m = 0; m < methods.size(); ++m) {
    SummaryRow row;
    row.method = methods[m];
    row.tau = spec.tau;
    std::vector<double> c, ic, cf, mi, mo, ei, eo;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& o = res.outcomes[m][r];
      if (!o) {
        ++row.failed;
        res.failures.push_back("replication " + std::to_string(r) + " " + method_name(methods[m]) + ": " +
                               errors[m][r]);
        continue;
      }
      c.push_back(o->c);
      ic.push_back(o->ic);
      cf.push_back(o->cf ? 1.0 : 0.0);
      mi.push_back(o->mpe_in);
      mo.push_back(o->mpe_out);
      if (o->mee_in) ei.push_back(*o->mee_in);
      if (o->mee_out) eo.push_back(*o->mee_out);
    }
    row.used = static_cast<int>(c.size());
    row.c = summarize(c);
    row.ic = summarize(ic);
    row.cf = summarize(cf);
    row.mpe_in = summarize(mi);
    row.mpe_out = summarize(mo);
    if (!ei.empty()) row.mee_in = summarize(ei);
    if (!eo.empty()) row.mee_out = summarize(eo);
    res.summary.push_back(row);
  }
  return res;
}

}  // namespace smaq
