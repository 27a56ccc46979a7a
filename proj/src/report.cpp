#include "smaq/report.hpp"

#include "smaq/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace smaq {

std::string fixed3(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  return s == "-0.000" ? "0.000" : s;
}

std::string mean_sd(const Statistic& s) { return fixed3(s.mean) + " (" + fixed3(s.sd) + ")"; }

std::string full_precision(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string render_text(const Table& t) {
  const std::size_t cols = t.text_header.size();
  std::vector<std::size_t> width(cols, 0);
  for (std::size_t c = 0; c < cols; ++c) width[c] = t.text_header[c].size();
  for (const auto& row : t.text_rows) {
    for (std::size_t c = 0; c < cols && c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& row) {
    std::string s;
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string cell = c < row.size() ? row[c] : "";
      if (c) s += "  ";
      if (c == 0) s += cell + std::string(width[c] - cell.size(), ' ');
      else s += std::string(width[c] - cell.size(), ' ') + cell;
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = t.title + "\n";
  const std::string head = line(t.text_header);
  out += head + std::string(head.size() - 1, '-') + "\n";
  for (const auto& row : t.text_rows) out += line(row);
  for (const auto& n : t.notes) out += n + "\n";
  return out;
}

std::string render_csv(const Table& t) {
  auto line = [](const std::vector<std::string>& row) {
    std::string s;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) s += ",";
      s += csv_escape(row[c]);
    }
    return s + "\n";
  };
  std::string out = line(t.csv_header);
  for (const auto& row : t.csv_rows) out += line(row);
  return out;
}

std::vector<std::string> emit_report(const std::vector<Table>& tables, const std::string& dir) {
  if (tables.empty()) throw ConfigError("nothing to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  for (const auto& t : tables) {
    for (const auto& [ext, body] : {std::pair{".csv", render_csv(t)}, std::pair{".txt", render_text(t)}}) {
      const std::string path = (std::filesystem::path(dir) / (t.name + ext)).string();
      std::ofstream out(path, std::ios::binary);
      if (!out) throw DataError("cannot write '" + path + "'");
      out << body;
      if (!out) throw DataError("failed writing '" + path + "'");
      written.push_back(path);
    }
  }
  return written;
}

namespace {

int method_rank(Method m) {
  switch (m) {
    case Method::kSMAMP: return 0;
    case Method::kPSMAMP: return 1;
    case Method::kSMAQP: return 2;
    case Method::kPSMAQP: return 3;
  }
  return 4;
}

}  // namespace

Table simulation_table(const std::vector<MonteCarloResult>& runs) {
  if (runs.empty()) throw ConfigError("no simulation results to report");
  struct Entry {
    const MonteCarloResult* run;
    const SummaryRow* row;
  };
  std::vector<Entry> entries;
  bool mee = false;
  for (const auto& r : runs) {
    for (const auto& row : r.summary) {
      entries.push_back({&r, &row});
      mee = mee || row.mee_out.has_value();
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (method_rank(a.row->method) != method_rank(b.row->method)) {
      return method_rank(a.row->method) < method_rank(b.row->method);
    }
    return a.row->tau < b.row->tau;
  });

  const SimulationSpec& spec = runs.front().spec;
  Table t;
  t.name = "simulation";
  t.title = "Example " + std::to_string(static_cast<int>(spec.example)) + ", n_tr = " + std::to_string(spec.n_tr) +
            ", n_te = " + std::to_string(spec.n_te) + ", p = " + std::to_string(resolved_p(spec)) +
            (spec.example == Example::kEx3 ? "" : ", error " + error_law_name(spec.error)) +
            ", replications = " + std::to_string(spec.replications) + ", seed = " + std::to_string(spec.seed);
  t.text_header = {"method", "tau", "C", "IC", "CF", "MPE in", "MPE out"};
  t.csv_header = {"method", "tau", "used", "failed", "C", "C_sd", "IC", "IC_sd", "CF", "CF_sd",
                  "mpe_in", "mpe_in_sd", "mpe_out", "mpe_out_sd"};
  if (mee) {
    for (const char* h : {"MEE in", "MEE out"}) t.text_header.push_back(h);
    for (const char* h : {"mee_in", "mee_in_sd", "mee_out", "mee_out_sd"}) t.csv_header.push_back(h);
  }
  t.text_header.push_back("failed");
  int failed = 0;
  for (const auto& e : entries) {
    const SummaryRow& r = *e.row;
    const bool pen = is_penalized_method(r.method);
    std::vector<std::string> text{method_name(r.method), fixed3(r.tau),
                                  pen ? fixed3(r.c.mean) : "--", pen ? fixed3(r.ic.mean) : "--",
                                  pen ? fixed3(r.cf.mean) : "--", mean_sd(r.mpe_in), mean_sd(r.mpe_out)};
    std::vector<std::string> csv{method_name(r.method), full_precision(r.tau), std::to_string(r.used),
                                 std::to_string(r.failed)};
    for (const Statistic* s : {&r.c, &r.ic, &r.cf, &r.mpe_in, &r.mpe_out}) {
      csv.push_back(full_precision(s->mean));
      csv.push_back(full_precision(s->sd));
    }
    if (mee) {
      for (const auto* s : {&r.mee_in, &r.mee_out}) {
        text.push_back(*s ? mean_sd(**s) : "--");
        csv.push_back(*s ? full_precision((*s)->mean) : "NA");
        csv.push_back(*s ? full_precision((*s)->sd) : "NA");
      }
    }
    text.push_back(std::to_string(r.failed));
    failed += r.failed;
    t.text_rows.push_back(std::move(text));
    t.csv_rows.push_back(std::move(csv));
  }
  t.notes.push_back("Standard deviations in parentheses. C, IC and CF apply to penalized methods only.");
  if (failed > 0) t.notes.push_back(std::to_string(failed) + " replication fits failed and were excluded.");
  return t;
}

Table bodyfat_prediction_table(const BodyfatResult& result) {
  std::vector<const SplitSummary*> rows;
  for (const auto& r : result.prediction) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const SplitSummary* a, const SplitSummary* b) {
    if (method_rank(a->method) != method_rank(b->method)) return method_rank(a->method) < method_rank(b->method);
    if (a->tau != b->tau) return a->tau < b->tau;
    return a->n_tr < b->n_tr;
  });
  Table t;
  t.name = "bodyfat_prediction";
  t.title = "Body fat prediction errors (x 1e-2)";
  t.text_header = {"method", "tau", "n_tr", "MPE in", "SD in", "MPE out", "SD out", "splits", "failed"};
  t.csv_header = {"method", "tau", "n_tr", "mpe_in", "sd_in", "mpe_out", "sd_out", "splits", "failed"};
  for (const SplitSummary* r : rows) {
    t.text_rows.push_back({method_name(r->method), fixed3(r->tau), std::to_string(r->n_tr),
                           fixed3(100.0 * r->mpe_in.mean), fixed3(100.0 * r->mpe_in.sd),
                           fixed3(100.0 * r->mpe_out.mean), fixed3(100.0 * r->mpe_out.sd), std::to_string(r->used),
                           std::to_string(r->failed)});
    t.csv_rows.push_back({method_name(r->method), full_precision(r->tau), std::to_string(r->n_tr),
                          full_precision(r->mpe_in.mean), full_precision(r->mpe_in.sd),
                          full_precision(r->mpe_out.mean), full_precision(r->mpe_out.sd), std::to_string(r->used),
                          std::to_string(r->failed)});
  }
  t.notes.push_back("Text values are scaled by 100; the CSV holds unscaled values.");
  return t;
}

Table bodyfat_weight_table(const BodyfatResult& result) {
  std::vector<const WeightSummary*> cols;
  for (const auto& w : result.weights) cols.push_back(&w);
  std::stable_sort(cols.begin(), cols.end(), [](const WeightSummary* a, const WeightSummary* b) {
    return method_rank(a->method) < method_rank(b->method);
  });
  Table t;
  t.name = "bodyfat_weights";
  t.title = "Full-sample weights with bootstrap standard errors";
  t.text_header = {"weight"};
  t.csv_header = {"method", "tau", "coefficient", "estimate", "se", "bootstrap_used", "bootstrap_skipped"};
  for (const auto* w : cols) t.text_header.push_back(method_name(w->method));
  if (cols.empty()) return t;
  const Eigen::Index p = cols.front()->weights.slopes.size();
  auto label = [&](Eigen::Index k) {
    if (k == 0) return std::string("w0");
    const auto j = static_cast<std::size_t>(k - 1);
    const std::string name = j < result.predictor_names.size() ? " " + result.predictor_names[j] : "";
    return "w" + std::to_string(k) + name;
  };
  for (Eigen::Index k = 0; k <= p; ++k) {
    std::vector<std::string> text{label(k)};
    for (const auto* w : cols) {
      const double est = k == 0 ? w->weights.intercept : w->weights.slopes(k - 1);
      text.push_back(fixed3(est) + " (" + fixed3(w->bootstrap.standard_errors(k)) + ")");
    }
    t.text_rows.push_back(std::move(text));
  }
  for (const auto* w : cols) {
    for (Eigen::Index k = 0; k <= p; ++k) {
      const double est = k == 0 ? w->weights.intercept : w->weights.slopes(k - 1);
      t.csv_rows.push_back({method_name(w->method), full_precision(w->tau), label(k), full_precision(est),
                            full_precision(w->bootstrap.standard_errors(k)),
                            std::to_string(w->bootstrap.requested - w->bootstrap.skipped),
                            std::to_string(w->bootstrap.skipped)});
    }
  }
  t.notes.push_back("Bootstrap standard errors in parentheses.");
  return t;
}

}  // namespace smaq
