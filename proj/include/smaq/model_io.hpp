#pragma once

#include "smaq/averaging_pipeline.hpp"

#include <string>
#include <vector>

namespace smaq {

inline constexpr int kModelFormatVersion = 1;

/// Model plus the metadata needed to read prediction inputs.
struct StoredModel {
  AveragingModel model;
  std::vector<std::string> predictor_names;
  std::string response_name;
  bool log_predictors = false;
};

/// Structured-text dump; see docs/model_format.md.
std::string serialize_model(const StoredModel& stored);
StoredModel deserialize_model(const std::string& text);

void save_model(const StoredModel& stored, const std::string& path);
StoredModel load_model(const std::string& path);

std::string cn_rule_name(CnRule rule);
CnRule parse_cn_rule(const std::string& name);
std::string msic_objective_name(MsicObjective objective);
MsicObjective parse_msic_objective(const std::string& name);
std::string pilot_rule_name(PilotRule rule);
PilotRule parse_pilot_rule(const std::string& name);
std::string evaluation_mode_name(EvaluationMode mode);
EvaluationMode parse_evaluation_mode(const std::string& name);

}  // namespace smaq
