#include "smaq/bodyfat.hpp"
#include "smaq/config.hpp"
#include "smaq/csv.hpp"
#include "smaq/error.hpp"
#include "smaq/model_io.hpp"
#include "smaq/report.hpp"
#include "smaq/simulation_lab.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

using namespace smaq;

namespace {

struct Flags {
  std::string config;
  std::optional<int> threads;
  std::optional<std::string> tau, methods, method, cn_rule, msic_objective, pilot_rule, evaluation;
  std::optional<double> scad_a;
  std::optional<int> grid_size;
  std::optional<std::string> input, schema, model, output;
  std::optional<int> example, reps, splits, bootstrap;
  std::optional<Eigen::Index> n_tr_sim, n_te, p;
  std::optional<std::string> error, ntr_list;
  std::optional<std::uint64_t> seed;
  std::optional<double> t;
  bool log_transform = false;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override its values");
  app->add_option("--threads", f.threads, "worker threads");
  app->add_option("--cn-rule", f.cn_rule, "one | log_p");
  app->add_option("--msic-objective", f.msic_objective, "loss | penalized");
  app->add_option("--pilot-rule", f.pilot_rule, "rule_of_thumb | normal_reference");
  app->add_option("--evaluation", f.evaluation, "refit | interpolate");
  app->add_option("--scad-a", f.scad_a, "SCAD shape parameter (> 2)");
  app->add_option("--grid-size", f.grid_size, "number of lambda values");
}

RunConfig resolve(const std::string& command, const Flags& f) {
  RunConfig c;
  c.command = command;
  if (command == "bodyfat") {
    c.methods = c.bodyfat.methods;
    c.output = "bodyfat_report";
  }
  if (command == "simulate") {
    c.methods = {Method::kSMAMP, Method::kPSMAMP, Method::kSMAQP, Method::kPSMAQP};
    c.output = "simulation_report";
  }
  if (!f.config.empty()) apply_config_file(f.config, c);
  if (f.threads) c.threads = *f.threads;
  if (f.tau) c.taus = parse_number_list(*f.tau, "--tau");
  if (f.methods) c.methods = parse_method_list(*f.methods);
  if (f.method) c.methods = {parse_method(*f.method)};
  if (f.cn_rule) c.fit.cn_rule = parse_cn_rule(*f.cn_rule);
  if (f.msic_objective) c.fit.msic_objective = parse_msic_objective(*f.msic_objective);
  if (f.pilot_rule) c.fit.pilot_rule = parse_pilot_rule(*f.pilot_rule);
  if (f.evaluation) c.fit.evaluation = parse_evaluation_mode(*f.evaluation);
  if (f.scad_a) c.fit.scad_a = *f.scad_a;
  if (f.grid_size) c.fit.grid_size = *f.grid_size;
  if (f.input) c.input = *f.input;
  if (f.schema) c.schema = *f.schema;
  if (f.model) c.model = *f.model;
  if (f.output) c.output = *f.output;
  if (f.log_transform) c.log_transform = true;
  if (f.example) {
    if (*f.example < 1 || *f.example > 3) throw ConfigError("--example must be 1, 2 or 3");
    c.simulation.example = static_cast<Example>(*f.example);
  }
  if (f.n_tr_sim) c.simulation.n_tr = *f.n_tr_sim;
  if (f.n_te) c.simulation.n_te = *f.n_te;
  if (f.p) c.simulation.p = *f.p;
  if (f.t) c.simulation.t = *f.t;
  if (f.error) c.simulation.error = parse_error_law(*f.error);
  if (f.reps) c.simulation.replications = *f.reps;
  if (f.seed) {
    c.simulation.seed = *f.seed;
    c.bodyfat.seed = *f.seed;
  }
  if (f.splits) c.bodyfat.splits = *f.splits;
  if (f.bootstrap) c.bodyfat.bootstrap = *f.bootstrap;
  if (f.ntr_list) {
    c.bodyfat.n_tr.clear();
    for (double v : parse_number_list(*f.ntr_list, "--ntr")) c.bodyfat.n_tr.push_back(static_cast<Eigen::Index>(v));
  }
  c.fit.threads = c.threads;
  validate_run_config(c);
  return c;
}

void print_failures(const std::vector<std::string>& failures) {
  for (const auto& f : failures) std::cerr << "warning: " << f << "\n";
}

int run_simulate(const RunConfig& c) {
  std::vector<MonteCarloResult> runs;
  for (double tau : c.taus) {
    SimulationSpec spec = c.simulation;
    spec.tau = tau;
    spec.fit = c.fit;
    runs.push_back(run_monte_carlo(spec, c.methods, c.threads));
    print_failures(runs.back().failures);
  }
  int failed = 0, total = 0;
  for (const auto& r : runs) {
    for (const auto& row : r.summary) {
      failed += row.failed;
      total += row.failed + row.used;
    }
  }
  const Table table = simulation_table(runs);
  emit_report({table}, c.output);
  std::cout << render_text(table);
  if (total > 0 && failed * 100 >= total) {
    std::cerr << "error: " << failed << " of " << total << " replication fits failed (limit 1%)\n";
    return 3;
  }
  return 0;
}

ColumnSchema schema_for(const RunConfig& c) {
  ColumnSchema s;
  if (!c.schema.empty()) s = load_schema(c.schema);
  if (c.log_transform) s.transform = Transform::kLog;
  return s;
}

int run_fit(const RunConfig& c) {
  const ColumnSchema schema = schema_for(c);
  if (schema.response.empty()) throw ConfigError("fit needs a schema naming the response column");
  const Dataset data = load_csv(c.input, schema);
  std::cerr << "loaded " << data.n() << " rows, " << data.p() << " predictors from " << c.input << "\n";
  FitConfig cfg = c.fit;
  cfg.tau = c.taus.front();
  cfg.method = c.methods.front();
  StoredModel stored{fit(data, cfg), data.predictor_names, data.response_name, schema.transform == Transform::kLog};
  save_model(stored, c.output);
  const AveragingModel& m = stored.model;
  std::cout << method_name(cfg.method) << " tau=" << fixed3(cfg.tau) << "\n";
  if (m.msic) std::cout << "lambda " << full_precision(m.msic->chosen_lambda) << "\n";
  if (m.cv) std::cout << "lambda " << full_precision(m.cv->chosen_lambda) << "\n";
  std::cout << "w0 " << full_precision(m.weights.intercept) << "\n";
  for (Eigen::Index j = 0; j < m.p(); ++j) {
    std::cout << "w" << j + 1 << " " << data.predictor_names[static_cast<std::size_t>(j)] << " "
              << full_precision(m.weights.slopes(j)) << "\n";
  }
  std::cout << "in-sample MPE " << full_precision(evaluate_mpe(data.y, m.training_predictions, cfg.tau)) << "\n";
  return 0;
}

int run_predict(const RunConfig& c) {
  StoredModel stored = load_model(c.model);
  stored.model.config.threads = c.threads;
  std::vector<std::string> names = stored.predictor_names;
  if (names.empty()) {
    for (Eigen::Index j = 0; j < stored.model.p(); ++j) names.push_back(std::to_string(j + 1));
  }
  const Transform tr = stored.log_predictors ? Transform::kLog : Transform::kNone;
  const Matrix x = load_predictors(c.input, names, tr);
  const Vector yhat = predict(stored.model, x);
  std::string body = "prediction\n";
  for (Eigen::Index i = 0; i < yhat.size(); ++i) body += full_precision(yhat(i)) + "\n";
  if (c.output.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(c.output, std::ios::binary);
    if (!out) throw DataError("cannot write '" + c.output + "'");
    out << body;
  }
  const CsvTable table = read_csv(c.input);
  bool has_response = false;
  for (const auto& h : table.header) has_response = has_response || h == stored.response_name;
  if (has_response && !stored.response_name.empty()) {
    ColumnSchema s;
    s.response = stored.response_name;
    s.predictors = names;
    s.transform = tr;
    const Dataset d = table_to_dataset(table, s, c.input);
    std::cerr << "MPE " << full_precision(evaluate_mpe(d.y, yhat, stored.model.config.tau)) << " on " << d.n()
              << " rows\n";
  }
  return 0;
}

int run_bodyfat_command(const RunConfig& c) {
  ColumnSchema schema = c.schema.empty() ? bodyfat_schema() : load_schema(c.schema);
  if (c.log_transform) schema.transform = Transform::kLog;
  const Dataset data = load_csv(c.input, schema);
  std::cerr << "loaded " << data.n() << " rows, " << data.p() << " predictors from " << c.input << "\n";
  BodyfatConfig b = c.bodyfat;
  b.taus = c.taus;
  b.methods = c.methods;
  b.fit = c.fit;
  b.threads = c.threads;
  const BodyfatResult res = run_bodyfat(data, b);
  print_failures(res.failures);
  const std::vector<Table> tables{bodyfat_prediction_table(res), bodyfat_weight_table(res)};
  emit_report(tables, c.output);
  for (const auto& t : tables) std::cout << render_text(t) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiparametric model averaging quantile prediction"};
  app.require_subcommand(1);
  Flags f;

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study on a synthetic example");
  add_common(sim, f);
  sim->add_option("--example", f.example, "1, 2 or 3");
  sim->add_option("--ntr", f.n_tr_sim, "training size");
  sim->add_option("--nte", f.n_te, "test size");
  sim->add_option("--p", f.p, "number of covariates (default floor(sqrt(ntr)))");
  sim->add_option("--t", f.t, "example 2 common-factor strength");
  sim->add_option("--error", f.error, "sn | t3 | mn");
  sim->add_option("--tau", f.tau, "quantile level(s), comma separated");
  sim->add_option("--reps", f.reps, "replications");
  sim->add_option("--seed", f.seed, "top-level seed");
  sim->add_option("--methods", f.methods, "comma separated: SMAMP,PSMAMP,SMAQP,PSMAQP");
  sim->add_option("--output", f.output, "report directory");

  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a CSV file and save it");
  add_common(fit_cmd, f);
  fit_cmd->add_option("--input", f.input, "training CSV");
  fit_cmd->add_option("--schema", f.schema, "column schema JSON");
  fit_cmd->add_option("--tau", f.tau, "quantile level");
  fit_cmd->add_option("--method", f.method, "SMAQP | PSMAQP | SMAMP | PSMAMP");
  fit_cmd->add_option("--output", f.output, "model file to write");
  fit_cmd->add_flag("--log", f.log_transform, "log-transform predictors");

  auto* pred = app.add_subcommand("predict", "Predict with a saved model");
  add_common(pred, f);
  pred->add_option("--model", f.model, "model file");
  pred->add_option("--input", f.input, "CSV with the model's predictor columns");
  pred->add_option("--output", f.output, "predictions CSV (default stdout)");

  auto* bf = app.add_subcommand("bodyfat", "Random-split study and bootstrap weights on the body fat data");
  add_common(bf, f);
  bf->add_option("--input", f.input, "body fat CSV");
  bf->add_option("--schema", f.schema, "column schema JSON (default: built-in body fat schema)");
  bf->add_option("--ntr", f.ntr_list, "training size(s), comma separated");
  bf->add_option("--splits", f.splits, "random partitions");
  bf->add_option("--tau", f.tau, "quantile level(s), comma separated");
  bf->add_option("--bootstrap", f.bootstrap, "bootstrap replications for weight SEs");
  bf->add_option("--seed", f.seed, "top-level seed");
  bf->add_option("--methods", f.methods, "comma separated method list");
  bf->add_option("--output", f.output, "report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed()) return run_simulate(resolve("simulate", f));
    if (fit_cmd->parsed()) return run_fit(resolve("fit", f));
    if (pred->parsed()) return run_predict(resolve("predict", f));
    if (bf->parsed()) return run_bodyfat_command(resolve("bodyfat", f));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
