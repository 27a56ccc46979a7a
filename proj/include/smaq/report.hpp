#pragma once

#include "smaq/bodyfat.hpp"
#include "smaq/simulation_lab.hpp"

#include <string>
#include <vector>

namespace smaq {

/// One report table in two renderings: rounded text for reading and a
/// full-precision CSV twin for machines.
struct Table {
  std::string name;   // file stem
  std::string title;
  std::vector<std::string> text_header;
  std::vector<std::vector<std::string>> text_rows;
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  std::vector<std::string> notes;
};

std::string fixed3(double v);
std::string mean_sd(const Statistic& s);  // "0.494 (0.043)"
std::string full_precision(double v);

std::string render_text(const Table& table);
std::string render_csv(const Table& table);

/// Writes <dir>/<name>.csv and <dir>/<name>.txt for every table.
std::vector<std::string> emit_report(const std::vector<Table>& tables, const std::string& dir);

/// One row per (method, tau), sorted by method then tau.
Table simulation_table(const std::vector<MonteCarloResult>& runs);
Table bodyfat_prediction_table(const BodyfatResult& result);
Table bodyfat_weight_table(const BodyfatResult& result);

}  // namespace smaq
