#include "smaq/csv.hpp"

#include "smaq/error.hpp"
#include "smaq/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace smaq {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::size_t resolve_column(const std::vector<std::string>& header, const std::string& key, const std::string& source) {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (trim(header[k]) == trim(key)) return k;
  }
  if (!key.empty() && std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const auto pos = std::stoul(key);
    if (pos >= 1 && pos <= header.size()) return pos - 1;
  }
  throw DataError(source + ": no column named '" + key + "'");
}

double cell_value(const CsvTable& t, std::size_t r, std::size_t c, const std::string& source) {
  const auto& row = t.rows[r];
  const std::string where = source + ": row " + std::to_string(r + 2) + ", column '" + t.header[c] + "'";
  if (c >= row.size() || trim(row[c]).empty()) throw DataError(where + ": missing value");
  double v = 0.0;
  if (!parse_double(row[c], v) || !std::isfinite(v)) throw DataError(where + ": not a number ('" + row[c] + "')");
  return v;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  const std::size_t n = text.size();
  if (n >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  auto end_field = [&] {
    rec.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(rec.size() == 1 && rec[0].empty())) records.push_back(std::move(rec));
    rec.clear();
  };
  for (; i < n; ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (i + 1 < n && text[i + 1] == '\n') ++i;
      end_record();
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  if (field_started || !rec.empty()) end_record();
  if (records.empty()) throw DataError("empty CSV input");
  CsvTable t;
  t.header = std::move(records.front());
  t.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  return t;
}

CsvTable read_csv(const std::string& path) {
  try {
    return parse_csv(slurp(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ColumnSchema load_schema(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  ColumnSchema s;
  try {
    if (!j.contains("response")) throw ConfigError(path + ": schema needs a 'response' entry");
    const auto& r = j.at("response");
    s.response = r.is_number_integer() ? std::to_string(r.get<int>()) : r.get<std::string>();
    if (j.contains("predictors")) {
      for (const auto& p : j.at("predictors")) {
        s.predictors.push_back(p.is_number_integer() ? std::to_string(p.get<int>()) : p.get<std::string>());
      }
    }
    const std::string tr = j.value("transform", std::string("none"));
    if (tr == "log") s.transform = Transform::kLog;
    else if (tr != "none") throw ConfigError(path + ": transform must be 'none' or 'log'");
    s.response_scale = j.value("response_scale", 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!(s.response_scale != 0.0 && std::isfinite(s.response_scale))) {
    throw ConfigError(path + ": response_scale must be finite and nonzero");
  }
  return s;
}

void save_schema(const ColumnSchema& s, const std::string& path) {
  nlohmann::ordered_json j;
  j["response"] = s.response;
  j["predictors"] = s.predictors;
  j["transform"] = s.transform == Transform::kLog ? "log" : "none";
  j["response_scale"] = s.response_scale;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

ColumnSchema bodyfat_schema() {
  ColumnSchema s;
  s.response = "BodyFat";
  s.predictors = {"Age", "Weight", "Height", "Neck", "Chest", "Abdomen", "Hip",
                  "Thigh", "Knee", "Ankle", "Biceps", "Forearm", "Wrist"};
  s.transform = Transform::kLog;
  s.response_scale = 0.01;
  return s;
}

Dataset table_to_dataset(const CsvTable& t, const ColumnSchema& schema, const std::string& source) {
  const std::size_t ry = resolve_column(t.header, schema.response, source);
  std::vector<std::size_t> cols;
  if (schema.predictors.empty()) {
    for (std::size_t k = 0; k < t.header.size(); ++k) {
      if (k != ry) cols.push_back(k);
    }
  } else {
    for (const auto& name : schema.predictors) cols.push_back(resolve_column(t.header, name, source));
  }
  if (cols.empty()) throw DataError(source + ": no predictor columns selected");
  if (t.rows.empty()) throw DataError(source + ": no data rows");

  Dataset d;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto p = static_cast<Eigen::Index>(cols.size());
  d.x.resize(n, p);
  d.y.resize(n);
  d.response_name = trim(t.header[ry]);
  for (std::size_t c : cols) d.predictor_names.push_back(trim(t.header[c]));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    d.y(i) = cell_value(t, r, ry, source) * schema.response_scale;
    for (Eigen::Index j = 0; j < p; ++j) {
      const std::size_t c = cols[static_cast<std::size_t>(j)];
      double v = cell_value(t, r, c, source);
      if (schema.transform == Transform::kLog) {
        if (!(v > 0.0)) {
          throw DataError(source + ": row " + std::to_string(r + 2) + ", column '" + t.header[c] +
                          "': log transform needs a positive value, got " + t.rows[r][c]);
        }
        v = std::log(v);
      }
      d.x(i, j) = v;
    }
  }
  return d;
}

Dataset load_csv(const std::string& path, const ColumnSchema& schema) {
  return table_to_dataset(read_csv(path), schema, path);
}

Matrix load_predictors(const std::string& path, const std::vector<std::string>& names, Transform transform) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) throw DataError(path + ": no data rows");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Matrix x(n, static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const std::size_t c = resolve_column(t.header, names[j], path);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = cell_value(t, static_cast<std::size_t>(i), c, path);
      if (transform == Transform::kLog) {
        if (!(v > 0.0)) {
          throw DataError(path + ": row " + std::to_string(i + 2) + ", column '" + t.header[c] +
                          "': log transform needs a positive value");
        }
        v = std::log(v);
      }
      x(i, static_cast<Eigen::Index>(j)) = v;
    }
  }
  return x;
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  const Eigen::Index p = data.p();
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto k = static_cast<std::size_t>(j);
    out << csv_escape(k < data.predictor_names.size() ? data.predictor_names[k] : "X" + std::to_string(j + 1)) << ",";
  }
  out << csv_escape(data.response_name.empty() ? "Y" : data.response_name) << "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) out << format_full(data.x(i, j)) << ",";
    out << format_full(data.y(i)) << "\n";
  }
  if (!out) throw DataError("failed writing '" + path + "'");
}

Split random_split(const Dataset& data, Eigen::Index n_tr, std::uint64_t seed) {
  const Eigen::Index n = data.n();
  if (n_tr <= 0 || n_tr >= n) {
    throw ConfigError("training size must lie strictly between 0 and " + std::to_string(n) + ", got " +
                      std::to_string(n_tr));
  }
  Rng rng(seed);
  const auto perm = rng.permutation(static_cast<std::size_t>(n));
  Split s;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    (static_cast<Eigen::Index>(k) < n_tr ? s.train_index : s.test_index).push_back(static_cast<Eigen::Index>(perm[k]));
  }
  std::sort(s.train_index.begin(), s.train_index.end());
  std::sort(s.test_index.begin(), s.test_index.end());
  s.train = data.rows(s.train_index);
  s.test = data.rows(s.test_index);
  return s;
}

}  // namespace smaq
