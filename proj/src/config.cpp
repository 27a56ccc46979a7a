#include "smaq/config.hpp"

#include "smaq/error.hpp"
#include "smaq/model_io.hpp"

#include "json.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace smaq {

namespace {

using nlohmann::json;

std::string fail_prefix(const std::string& source, const std::string& key) { return source + ": '" + key + "' "; }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& source,
                    const std::string& section) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError(source + ": unknown key '" + (section.empty() ? "" : section + ".") + it.key() + "'");
    }
  }
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& source) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fail_prefix(source, key) + "has the wrong type");
  }
}

std::vector<double> number_or_list(const json& v, const std::string& key, const std::string& source) {
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(fail_prefix(source, key) + "must hold numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  throw ConfigError(fail_prefix(source, key) + "must be a number or a list of numbers");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

void check_readable(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path is required");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw ConfigError(what + " '" + path + "' does not exist");
  if (::access(path.c_str(), R_OK) != 0) throw ConfigError(what + " '" + path + "' is not readable");
}

void check_writable_dir(const std::string& path) {
  if (path.empty()) return;
  std::filesystem::path p = std::filesystem::absolute(path);
  std::error_code ec;
  while (!p.empty() && !std::filesystem::exists(p, ec)) {
    if (p == p.parent_path()) break;
    p = p.parent_path();
  }
  if (!std::filesystem::is_directory(p, ec) || ::access(p.c_str(), W_OK) != 0) {
    throw ConfigError("output location '" + path + "' is not writable");
  }
}

}  // namespace

std::vector<Method> parse_method_list(const std::string& csv) {
  std::vector<Method> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw ConfigError("empty method list");
  return out;
}

std::vector<double> parse_number_list(const std::string& csv, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError(what + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

void apply_config_text(const std::string& text, RunConfig& cfg, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": top level must be an object");
  reject_unknown(j,
                 {"input", "schema", "model", "output", "tau", "taus", "method", "methods", "cn_rule", "msic_objective", "pilot_rule",
                  "evaluation", "bandwidth_overrides", "covariate_taus", "scad_a", "grid_size", "grid_min_ratio",
                  "tolerance", "max_sweeps", "polish", "ls_tolerance", "ls_max_sweeps", "cv_folds", "cv_seed",
                  "threads", "log_transform", "simulation", "bodyfat"},
                 source, "");
  FitConfig& f = cfg.fit;
  for (const char* key : {"input", "schema", "model", "output"}) {
    if (!j.contains(key)) continue;
    const auto v = get<std::string>(j, key, source);
    if (std::string(key) == "input") cfg.input = v;
    if (std::string(key) == "schema") cfg.schema = v;
    if (std::string(key) == "model") cfg.model = v;
    if (std::string(key) == "output") cfg.output = v;
  }
  if (j.contains("tau")) cfg.taus = number_or_list(j["tau"], "tau", source);
  if (j.contains("taus")) cfg.taus = number_or_list(j["taus"], "taus", source);
  if (j.contains("method")) cfg.methods = {parse_method(get<std::string>(j, "method", source))};
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : get<std::vector<std::string>>(j, "methods", source)) cfg.methods.push_back(parse_method(m));
  }
  if (j.contains("cn_rule")) f.cn_rule = parse_cn_rule(get<std::string>(j, "cn_rule", source));
  if (j.contains("msic_objective")) {
    f.msic_objective = parse_msic_objective(get<std::string>(j, "msic_objective", source));
  }
  if (j.contains("pilot_rule")) f.pilot_rule = parse_pilot_rule(get<std::string>(j, "pilot_rule", source));
  if (j.contains("evaluation")) f.evaluation = parse_evaluation_mode(get<std::string>(j, "evaluation", source));
  if (j.contains("bandwidth_overrides")) f.bandwidth_overrides = get<std::vector<double>>(j, "bandwidth_overrides", source);
  if (j.contains("covariate_taus")) f.covariate_taus = get<std::vector<double>>(j, "covariate_taus", source);
  if (j.contains("scad_a")) f.scad_a = get<double>(j, "scad_a", source);
  if (j.contains("grid_size")) f.grid_size = get<int>(j, "grid_size", source);
  if (j.contains("grid_min_ratio")) f.grid_min_ratio = get<double>(j, "grid_min_ratio", source);
  if (j.contains("tolerance")) f.solver.tolerance = get<double>(j, "tolerance", source);
  if (j.contains("max_sweeps")) f.solver.max_sweeps = get<int>(j, "max_sweeps", source);
  if (j.contains("polish")) f.solver.polish = get<bool>(j, "polish", source);
  if (j.contains("ls_tolerance")) f.least_squares.tolerance = get<double>(j, "ls_tolerance", source);
  if (j.contains("ls_max_sweeps")) f.least_squares.max_sweeps = get<int>(j, "ls_max_sweeps", source);
  if (j.contains("cv_folds")) f.cv_folds = get<int>(j, "cv_folds", source);
  if (j.contains("cv_seed")) f.cv_seed = get<std::uint64_t>(j, "cv_seed", source);
  if (j.contains("threads")) cfg.threads = get<int>(j, "threads", source);
  if (j.contains("log_transform")) cfg.log_transform = get<bool>(j, "log_transform", source);

  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    if (!s.is_object()) throw ConfigError(source + ": 'simulation' must be an object");
    reject_unknown(s, {"example", "n_tr", "n_te", "error", "replications", "seed", "t", "p"}, source, "simulation");
    SimulationSpec& sp = cfg.simulation;
    if (s.contains("example")) {
      const int ex = get<int>(s, "example", source);
      if (ex < 1 || ex > 3) throw ConfigError(source + ": 'simulation.example' must be 1, 2 or 3");
      sp.example = static_cast<Example>(ex);
    }
    if (s.contains("n_tr")) sp.n_tr = get<Eigen::Index>(s, "n_tr", source);
    if (s.contains("n_te")) sp.n_te = get<Eigen::Index>(s, "n_te", source);
    if (s.contains("error")) sp.error = parse_error_law(get<std::string>(s, "error", source));
    if (s.contains("replications")) sp.replications = get<int>(s, "replications", source);
    if (s.contains("seed")) sp.seed = get<std::uint64_t>(s, "seed", source);
    if (s.contains("t")) sp.t = get<double>(s, "t", source);
    if (s.contains("p")) sp.p = get<Eigen::Index>(s, "p", source);
  }
  if (j.contains("bodyfat")) {
    const json& b = j["bodyfat"];
    if (!b.is_object()) throw ConfigError(source + ": 'bodyfat' must be an object");
    reject_unknown(b, {"n_tr", "splits", "bootstrap", "seed", "weights_tau", "max_failure_rate"}, source, "bodyfat");
    BodyfatConfig& bc = cfg.bodyfat;
    if (b.contains("n_tr")) {
      bc.n_tr.clear();
      for (double v : number_or_list(b["n_tr"], "bodyfat.n_tr", source)) {
        if (v != std::floor(v)) throw ConfigError(source + ": 'bodyfat.n_tr' must hold integers");
        bc.n_tr.push_back(static_cast<Eigen::Index>(v));
      }
    }
    if (b.contains("splits")) bc.splits = get<int>(b, "splits", source);
    if (b.contains("bootstrap")) bc.bootstrap = get<int>(b, "bootstrap", source);
    if (b.contains("seed")) bc.seed = get<std::uint64_t>(b, "seed", source);
    if (b.contains("weights_tau")) bc.weights_tau = get<double>(b, "weights_tau", source);
    if (b.contains("max_failure_rate")) bc.max_failure_rate = get<double>(b, "max_failure_rate", source);
  }
}

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(ss.str(), cfg, path);
}

void validate_run_config(const RunConfig& c) {
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  if (c.taus.empty()) throw ConfigError("at least one tau is required");
  if (c.methods.empty()) throw ConfigError("at least one method is required");
  for (double tau : c.taus) {
    FitConfig probe = c.fit;
    probe.tau = tau;
    validate(probe);
  }
  const std::string& cmd = c.command;
  if (cmd == "simulate") {
    const SimulationSpec& s = c.simulation;
    if (s.n_tr < 50) throw ConfigError("simulation n_tr must be at least 50");
    if (s.n_te < 1) throw ConfigError("simulation n_te must be at least 1");
    if (s.replications < 2) throw ConfigError("replications must be at least 2");
    if (!(s.t >= 0.0)) throw ConfigError("simulation t must be nonnegative");
    if (s.p < 0) throw ConfigError("simulation p must be nonnegative");
    const Eigen::Index p = resolved_p(s);
    if (p < (s.example == Example::kEx3 ? 5 : 4)) throw ConfigError("p is too small for this example");
    check_writable_dir(c.output);
  } else if (cmd == "fit") {
    if (c.methods.size() != 1 || c.taus.size() != 1) throw ConfigError("fit takes exactly one method and one tau");
    check_readable(c.input, "input");
    if (!c.schema.empty()) check_readable(c.schema, "schema");
    if (c.output.empty()) throw ConfigError("fit needs an output model path");
    check_writable_dir(std::filesystem::path(c.output).parent_path().string());
  } else if (cmd == "predict") {
    check_readable(c.model, "model");
    check_readable(c.input, "input");
    if (!c.output.empty()) check_writable_dir(std::filesystem::path(c.output).parent_path().string());
  } else if (cmd == "bodyfat") {
    check_readable(c.input, "input");
    if (!c.schema.empty()) check_readable(c.schema, "schema");
    const BodyfatConfig& b = c.bodyfat;
    if (b.splits < 1) throw ConfigError("splits must be at least 1");
    if (b.bootstrap < 2) throw ConfigError("bootstrap must be at least 2");
    if (!(b.weights_tau > 0.0 && b.weights_tau < 1.0)) throw ConfigError("weights tau must lie in (0, 1)");
    if (!(b.max_failure_rate >= 0.0 && b.max_failure_rate <= 1.0)) {
      throw ConfigError("max_failure_rate must lie in [0, 1]");
    }
    if (b.n_tr.empty()) throw ConfigError("bodyfat needs at least one training size");
    for (Eigen::Index n : b.n_tr) {
      if (n < 50) throw ConfigError("bodyfat training size must be at least 50");
    }
    check_writable_dir(c.output);
  } else {
    throw ConfigError("unknown command '" + cmd + "'");
  }
}

}  // namespace smaq
