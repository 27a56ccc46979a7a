#include "smaq/model_io.hpp"

#include "smaq/error.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace smaq {

using nlohmann::ordered_json;

std::string cn_rule_name(CnRule rule) { return rule == CnRule::kOne ? "one" : "log_p"; }

CnRule parse_cn_rule(const std::string& name) {
  if (name == "one") return CnRule::kOne;
  if (name == "log_p") return CnRule::kLogP;
  throw ConfigError("C_n rule must be 'one' or 'log_p', got '" + name + "'");
}

std::string msic_objective_name(MsicObjective objective) {
  return objective == MsicObjective::kLoss ? "loss" : "penalized";
}

MsicObjective parse_msic_objective(const std::string& name) {
  if (name == "loss") return MsicObjective::kLoss;
  if (name == "penalized") return MsicObjective::kPenalized;
  throw ConfigError("MSIC objective must be 'loss' or 'penalized', got '" + name + "'");
}

std::string pilot_rule_name(PilotRule rule) {
  return rule == PilotRule::kNormalReference ? "normal_reference" : "rule_of_thumb";
}

PilotRule parse_pilot_rule(const std::string& name) {
  if (name == "normal_reference") return PilotRule::kNormalReference;
  if (name == "rule_of_thumb") return PilotRule::kRuleOfThumb;
  throw ConfigError("pilot rule must be 'normal_reference' or 'rule_of_thumb', got '" + name + "'");
}

std::string evaluation_mode_name(EvaluationMode mode) {
  return mode == EvaluationMode::kRefit ? "refit" : "interpolate";
}

EvaluationMode parse_evaluation_mode(const std::string& name) {
  if (name == "refit") return EvaluationMode::kRefit;
  if (name == "interpolate") return EvaluationMode::kInterpolate;
  throw ConfigError("evaluation mode must be 'refit' or 'interpolate', got '" + name + "'");
}

namespace {

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string serialize_model(const StoredModel& stored) {
  const AveragingModel& m = stored.model;
  const FitConfig& c = m.config;
  ordered_json j;
  j["format"] = "smaq-model";
  j["version"] = kModelFormatVersion;
  j["method"] = method_name(c.method);
  j["tau"] = c.tau;
  j["config"] = {
      {"cn_rule", cn_rule_name(c.cn_rule)},
      {"msic_objective", msic_objective_name(c.msic_objective)},
      {"pilot_rule", pilot_rule_name(c.pilot_rule)},
      {"scad_a", c.scad_a},
      {"grid_size", c.grid_size},
      {"grid_min_ratio", c.grid_min_ratio},
      {"tolerance", c.solver.tolerance},
      {"max_sweeps", c.solver.max_sweeps},
      {"polish", c.solver.polish},
      {"ls_tolerance", c.least_squares.tolerance},
      {"ls_max_sweeps", c.least_squares.max_sweeps},
      {"cv_folds", c.cv_folds},
      {"cv_seed", c.cv_seed},
      {"evaluation", evaluation_mode_name(c.evaluation)},
  };
  j["predictors"] = stored.predictor_names;
  j["response"] = stored.response_name;
  j["log_predictors"] = stored.log_predictors;
  j["weights"] = {{"intercept", m.weights.intercept}, {"slopes", to_vec(m.weights.slopes)}};
  if (m.msic) j["selected_lambda"] = m.msic->chosen_lambda;
  if (m.cv) j["selected_lambda"] = m.cv->chosen_lambda;
  ordered_json margs = ordered_json::array();
  for (const auto& mm : m.marginals) {
    margs.push_back({
        {"column", mm.column()},
        {"loss", mm.loss() == SmootherLoss::kQuantile ? "quantile" : "mean"},
        {"tau", mm.tau()},
        {"bandwidth", mm.bandwidth()},
        {"knots", mm.knots()},
        {"responses", mm.responses()},
        {"levels", mm.fitted_levels()},
        {"slopes", mm.fitted_slopes()},
    });
  }
  j["marginals"] = std::move(margs);
  return j.dump(1) + "\n";
}

StoredModel deserialize_model(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != "smaq-model") throw DataError("not a smaq model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model format version " + std::to_string(version));
    }
    StoredModel s;
    AveragingModel& m = s.model;
    FitConfig& c = m.config;
    c.method = parse_method(j.at("method").get<std::string>());
    c.tau = j.at("tau").get<double>();
    const auto& cj = j.at("config");
    c.cn_rule = parse_cn_rule(cj.at("cn_rule").get<std::string>());
    c.msic_objective = parse_msic_objective(cj.at("msic_objective").get<std::string>());
    c.pilot_rule = parse_pilot_rule(cj.at("pilot_rule").get<std::string>());
    c.scad_a = cj.at("scad_a").get<double>();
    c.grid_size = cj.at("grid_size").get<int>();
    c.grid_min_ratio = cj.at("grid_min_ratio").get<double>();
    c.solver.tolerance = cj.at("tolerance").get<double>();
    c.solver.max_sweeps = cj.at("max_sweeps").get<int>();
    c.solver.polish = cj.at("polish").get<bool>();
    c.least_squares.tolerance = cj.at("ls_tolerance").get<double>();
    c.least_squares.max_sweeps = cj.at("ls_max_sweeps").get<int>();
    c.cv_folds = cj.at("cv_folds").get<int>();
    c.cv_seed = cj.at("cv_seed").get<std::uint64_t>();
    c.evaluation = parse_evaluation_mode(cj.at("evaluation").get<std::string>());
    s.predictor_names = j.at("predictors").get<std::vector<std::string>>();
    s.response_name = j.at("response").get<std::string>();
    s.log_predictors = j.at("log_predictors").get<bool>();
    m.weights.intercept = j.at("weights").at("intercept").get<double>();
    m.weights.slopes = from_vec(j.at("weights").at("slopes").get<std::vector<double>>());
    for (const auto& mj : j.at("marginals")) {
      const std::string loss = mj.at("loss").get<std::string>();
      if (loss != "quantile" && loss != "mean") throw DataError("unknown marginal loss '" + loss + "'");
      m.marginals.emplace_back(mj.at("column").get<int>(),
                               loss == "quantile" ? SmootherLoss::kQuantile : SmootherLoss::kMean,
                               mj.at("tau").get<double>(), mj.at("bandwidth").get<double>(),
                               mj.at("knots").get<std::vector<double>>(), mj.at("responses").get<std::vector<double>>(),
                               mj.at("levels").get<std::vector<double>>(), mj.at("slopes").get<std::vector<double>>());
    }
    if (m.weights.slopes.size() != m.p()) throw DataError("weight count does not match marginal count");
    if (j.contains("selected_lambda")) {
      // only the choice survives; the grid and path are not stored
      const double lam = j.at("selected_lambda").get<double>();
      if (c.method == Method::kPSMAQP) {
        m.msic.emplace();
        m.msic->chosen_lambda = lam;
        m.msic->chosen_weights = m.weights;
        m.msic->cn = cn_value(c.cn_rule, m.p());
      } else if (c.method == Method::kPSMAMP) {
        m.cv.emplace();
        m.cv->chosen_lambda = lam;
        m.cv->chosen_weights = m.weights;
      }
    }
    if (!s.predictor_names.empty() && static_cast<Eigen::Index>(s.predictor_names.size()) != m.p()) {
      throw DataError("predictor name count does not match marginal count");
    }
    validate(c, m.p());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const StoredModel& stored, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << serialize_model(stored);
  if (!out) throw DataError("failed writing '" + path + "'");
}

StoredModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_model(ss.str());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace smaq
