#pragma once

#include "smaq/averaging_pipeline.hpp"
#include "smaq/bodyfat.hpp"
#include "smaq/simulation_lab.hpp"

#include <string>
#include <vector>

namespace smaq {

/// Everything a CLI run needs. Filled from defaults, then a JSON config file,
/// then command-line flags (flags win). Key schema: docs/config.md.
struct RunConfig {
  std::string command;
  std::string input;
  std::string schema;
  std::string model;
  std::string output;

  FitConfig fit;
  std::vector<double> taus{0.5};
  std::vector<Method> methods{Method::kPSMAQP};

  SimulationSpec simulation;
  BodyfatConfig bodyfat;
  bool log_transform = false;
  int threads = 1;
};

/// Merges the keys of a JSON document into `config`. Unknown keys and
/// out-of-domain values raise ConfigError naming the key.
void apply_config_text(const std::string& json_text, RunConfig& config, const std::string& source = "config");
void apply_config_file(const std::string& path, RunConfig& config);

/// Cross-field checks and path checks, run before any computation.
void validate_run_config(const RunConfig& config);

std::vector<Method> parse_method_list(const std::string& csv);
std::vector<double> parse_number_list(const std::string& csv, const std::string& what);

}  // namespace smaq
