#pragma once

#include "smaq/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace smaq {

/// Raw RFC-4180 table: first record is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(const std::string& field);

enum class Transform { kNone, kLog };

/// Which columns form the response and the predictors. Columns are named by
/// header text or by 1-based position ("3"). An empty predictor list means
/// every column except the response.
struct ColumnSchema {
  std::string response;
  std::vector<std::string> predictors;
  Transform transform = Transform::kNone;  // applied to predictors only
  double response_scale = 1.0;             // response multiplied by this
};

ColumnSchema load_schema(const std::string& path);  // JSON
void save_schema(const ColumnSchema& schema, const std::string& path);

/// Response BodyFat (as a fraction), the 13 measurement columns, log predictors.
ColumnSchema bodyfat_schema();

Dataset load_csv(const std::string& path, const ColumnSchema& schema);
Dataset table_to_dataset(const CsvTable& table, const ColumnSchema& schema, const std::string& source = "input");

/// Predictor-only matrix for prediction inputs; columns picked by name.
Matrix load_predictors(const std::string& path, const std::vector<std::string>& names, Transform transform);

/// Writes predictors then the response, full precision.
void save_csv(const Dataset& data, const std::string& path);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<Eigen::Index> train_index;
  std::vector<Eigen::Index> test_index;
};

/// Uniform partition without replacement; train rows are the first n_tr
/// entries of a seeded permutation, both index lists sorted.
Split random_split(const Dataset& data, Eigen::Index n_tr, std::uint64_t seed);

}  // namespace smaq
