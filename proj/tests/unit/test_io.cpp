#include "doctest.h"
#include "synthetic.hpp"

#include "smaq/bodyfat.hpp"
#include "smaq/config.hpp"
#include "smaq/csv.hpp"
#include "smaq/error.hpp"
#include "smaq/report.hpp"
#include "smaq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace smaq;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("smaq_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_text(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("CSV parsing handles quotes and line endings") {
  auto t = parse_csv("\xEF\xBB\xBF" "a,\"b,c\",d\r\n1,\"x \"\"q\"\"\",3\r\n\r\n4,\"multi\nline\",6\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b,c", "d"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x \"q\"");
  CHECK(t.rows[1][1] == "multi\nline");
  CHECK(t.rows[1][2] == "6");
  CHECK_THROWS_AS(parse_csv("a,b\n\"open,2\n"), DataError);
  CHECK_THROWS_AS(parse_csv(""), DataError);
}

TEST_CASE("CSV escaping round trips") {
  for (std::string s : {"plain", "a,b", "q\"uote", "line\nbreak", ""}) {
    auto t = parse_csv("h\n" + csv_escape(s) + "\n");
    if (s.empty()) {
      CHECK(t.rows.empty());
    } else {
      CHECK(t.rows.at(0).at(0) == s);
    }
  }
}

TEST_CASE("table to dataset by name and position") {
  auto t = parse_csv("id,y,x1,x2\n1,2.5,3,4\n2,3.5,5,6\n");
  ColumnSchema s{"y", {"x2", "3"}, Transform::kNone, 1.0};
  auto d = table_to_dataset(t, s);
  CHECK(d.p() == 2);
  CHECK(d.x(0, 0) == 4.0);
  CHECK(d.x(1, 1) == 5.0);
  CHECK(d.y(1) == 3.5);
  CHECK(d.predictor_names == std::vector<std::string>{"x2", "x1"});
  ColumnSchema all{"2", {}, Transform::kLog, 0.1};
  auto e = table_to_dataset(t, all);
  CHECK(e.p() == 3);
  CHECK(e.x(0, 2) == doctest::Approx(std::log(4.0)));
  CHECK(e.y(0) == doctest::Approx(0.25));
}

TEST_CASE("bad cells are reported by row and column") {
  auto t = parse_csv("y,x1,x2\n1,2,3\n4,,6\n");
  auto msg = error_text([&] { table_to_dataset(t, ColumnSchema{"y", {}, Transform::kNone, 1.0}); });
  CHECK(msg.find("row 3") != std::string::npos);
  CHECK(msg.find("x1") != std::string::npos);
  auto u = parse_csv("y,x1\n1,2\n4,abc\n");
  CHECK_THROWS_AS(table_to_dataset(u, ColumnSchema{"y", {}, Transform::kNone, 1.0}), DataError);
  auto v = parse_csv("y,x1\n1,2\n4,-1\n");
  msg = error_text([&] { table_to_dataset(v, ColumnSchema{"y", {}, Transform::kLog, 1.0}); });
  CHECK(msg.find("row 3") != std::string::npos);
  CHECK_THROWS_AS(table_to_dataset(v, ColumnSchema{"y", {}, Transform::kLog, 1.0}), DataError);
  CHECK_THROWS_AS(table_to_dataset(t, ColumnSchema{"z", {}, Transform::kNone, 1.0}), DataError);
}

TEST_CASE("CSV save and load round trip") {
  auto dir = scratch_dir("csv");
  Rng rng(1);
  Dataset d;
  d.x.resize(30, 3);
  d.y.resize(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (int j = 0; j < 3; ++j) d.x(i, j) = rng.normal() * std::pow(10.0, j * 3 - 3);
    d.y(i) = rng.normal();
  }
  d.predictor_names = {"a", "b", "c"};
  d.response_name = "y";
  save_csv(d, (dir / "d.csv").string());
  auto back = load_csv((dir / "d.csv").string(), ColumnSchema{"y", {}, Transform::kNone, 1.0});
  CHECK((back.x - d.x).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((back.y - d.y).cwiseAbs().maxCoeff() <= 1e-12);
  auto m = load_predictors((dir / "d.csv").string(), {"c", "a"}, Transform::kNone);
  CHECK(m.col(0) == back.x.col(2));
  CHECK_THROWS_AS(load_csv((dir / "missing.csv").string(), bodyfat_schema()), DataError);
}

TEST_CASE("schema files") {
  auto dir = scratch_dir("schema");
  auto s = bodyfat_schema();
  CHECK(s.predictors.size() == 13);
  CHECK(s.transform == Transform::kLog);
  CHECK(s.response_scale == 0.01);
  save_schema(s, (dir / "s.json").string());
  auto back = load_schema((dir / "s.json").string());
  CHECK(back.response == s.response);
  CHECK(back.predictors == s.predictors);
  CHECK(back.transform == s.transform);
  CHECK(back.response_scale == s.response_scale);
  std::ofstream(dir / "bad.json") << "{\"predictors\": []}";
  CHECK_THROWS_AS(load_schema((dir / "bad.json").string()), ConfigError);
}

TEST_CASE("random split partitions the rows") {
  Dataset d;
  d.x = Matrix::Zero(60, 1);
  d.y.resize(60);
  for (int i = 0; i < 60; ++i) d.x(i, 0) = d.y(i) = i;
  auto a = random_split(d, 45, 3);
  auto b = random_split(d, 45, 3);
  auto c = random_split(d, 45, 4);
  CHECK(a.train_index == b.train_index);
  CHECK(a.train_index != c.train_index);
  CHECK(a.train.n() == 45);
  CHECK(a.test.n() == 15);
  std::set<Eigen::Index> all(a.train_index.begin(), a.train_index.end());
  for (auto i : a.test_index) CHECK(all.insert(i).second);
  CHECK(all.size() == 60);
  CHECK(std::is_sorted(a.train_index.begin(), a.train_index.end()));
  for (std::size_t k = 0; k < a.test_index.size(); ++k) CHECK(a.test.y(k) == double(a.test_index[k]));
  CHECK_THROWS_AS(random_split(d, 0, 1), ConfigError);
  CHECK_THROWS_AS(random_split(d, 60, 1), ConfigError);
}

TEST_CASE("config files merge and reject unknown keys") {
  RunConfig c;
  c.command = "simulate";
  apply_config_text(R"({"tau": 0.75, "scad_a": 3.0, "msic_objective": "penalized", "methods": ["SMAQP", "psmamp"],
                        "simulation": {"example": 3, "n_tr": 200, "replications": 5}})",
                    c);
  CHECK(c.taus == std::vector<double>{0.75});
  CHECK(c.fit.scad_a == 3.0);
  CHECK(c.fit.msic_objective == MsicObjective::kPenalized);
  CHECK(c.methods == std::vector<Method>{Method::kSMAQP, Method::kPSMAMP});
  CHECK(c.simulation.example == Example::kEx3);
  CHECK(c.simulation.n_tr == 200);
  CHECK_NOTHROW(validate_run_config(c));

  auto msg = error_text([&] { apply_config_text(R"({"lamda": 1})", c); });
  CHECK(msg.find("lamda") != std::string::npos);
  CHECK_THROWS_AS(apply_config_text(R"({"simulation": {"seeds": 1}})", c), ConfigError);
  CHECK_THROWS_AS(apply_config_text(R"({"tau": "half"})", c), ConfigError);
  CHECK_THROWS_AS(apply_config_text(R"({"msic_objective": "aic"})", c), ConfigError);
  CHECK_THROWS_AS(apply_config_text("[1, 2]", c), ConfigError);
  CHECK_THROWS_AS(apply_config_text("{", c), ConfigError);
}

TEST_CASE("run config validation") {
  RunConfig c;
  c.command = "simulate";
  c.taus = {1.2};
  CHECK_THROWS_AS(validate_run_config(c), ConfigError);
  c.taus = {0.5};
  c.fit.scad_a = 1.5;
  CHECK_THROWS_AS(validate_run_config(c), ConfigError);
  c.fit.scad_a = 3.7;
  c.simulation.replications = 1;
  CHECK_THROWS_AS(validate_run_config(c), ConfigError);
  c.simulation.replications = 10;
  c.simulation.p = 2;
  CHECK_THROWS_AS(validate_run_config(c), ConfigError);

  RunConfig b;
  b.command = "bodyfat";
  b.input = "/nonexistent/bodyfat.csv";
  CHECK_THROWS_AS(validate_run_config(b), ConfigError);
  auto dir = scratch_dir("runcfg");
  std::ofstream(dir / "x.csv") << "a\n1\n";
  b.input = (dir / "x.csv").string();
  b.output = dir.string();
  CHECK_NOTHROW(validate_run_config(b));
  b.bodyfat.bootstrap = 0;
  CHECK_THROWS_AS(validate_run_config(b), ConfigError);
  b.bodyfat.bootstrap = 100;
  b.bodyfat.n_tr = {20};
  CHECK_THROWS_AS(validate_run_config(b), ConfigError);

  RunConfig f;
  f.command = "fit";
  f.input = (dir / "x.csv").string();
  CHECK_THROWS_AS(validate_run_config(f), ConfigError);
  f.output = (dir / "m.json").string();
  CHECK_NOTHROW(validate_run_config(f));
  f.methods = {Method::kSMAQP, Method::kPSMAQP};
  CHECK_THROWS_AS(validate_run_config(f), ConfigError);
}

TEST_CASE("list parsing") {
  CHECK(parse_number_list("0.25, 0.5,0.75", "tau") == std::vector<double>{0.25, 0.5, 0.75});
  CHECK_THROWS_AS(parse_number_list("0.5,x", "tau"), ConfigError);
  CHECK(parse_method_list("smamp,PSMAQP").size() == 2);
  CHECK_THROWS_AS(parse_method_list("nope"), ConfigError);
}

TEST_CASE("number formatting") {
  CHECK(fixed3(0.4944) == "0.494");
  CHECK(fixed3(-0.0001) == "0.000");
  CHECK(fixed3(std::nan("")) == "NA");
  CHECK(mean_sd(Statistic{0.494, 0.043}) == "0.494 (0.043)");
}

TEST_CASE("simulation table rows and determinism") {
  MonteCarloResult run;
  run.spec.tau = 0.5;
  run.methods = {Method::kPSMAQP, Method::kSMAMP};
  for (Method m : run.methods) {
    SummaryRow r;
    r.method = m;
    r.tau = 0.5;
    r.used = 10;
    r.mpe_out = Statistic{0.5, 0.05};
    run.summary.push_back(r);
  }
  auto run2 = run;
  run2.spec.tau = 0.25;
  for (auto& r : run2.summary) r.tau = 0.25;
  auto t = simulation_table({run, run2});
  REQUIRE(t.text_rows.size() == 4);
  REQUIRE(t.csv_rows.size() == 4);
  CHECK(t.text_rows[0][0] == "SMAMP");
  CHECK(t.text_rows[3][0] == "PSMAQP");
  auto single = run;
  single.summary.resize(1);
  single.methods.resize(1);
  CHECK(simulation_table({single}).csv_rows.size() == 1);

  auto d1 = scratch_dir("report1"), d2 = scratch_dir("report2");
  auto files1 = emit_report({t}, d1.string());
  auto files2 = emit_report({simulation_table({run, run2})}, d2.string());
  CHECK(files1.size() == 2);
  CHECK(slurp(d1 / "simulation.csv") == slurp(d2 / "simulation.csv"));
  CHECK(slurp(d1 / "simulation.txt") == slurp(d2 / "simulation.txt"));
  auto parsed = parse_csv(slurp(d1 / "simulation.csv"));
  CHECK(parsed.rows.size() == 4);
}

TEST_CASE("body-fat pipeline on synthetic data") {
  auto table = parse_csv(synthetic::bodyfat_csv(120, 2));
  auto data = table_to_dataset(table, bodyfat_schema());
  CHECK(data.p() == 13);
  CHECK(data.y.maxCoeff() < 1.0);
  BodyfatConfig cfg;
  cfg.n_tr = {80};
  cfg.splits = 4;
  cfg.taus = {0.5, 0.75};
  cfg.methods = {Method::kSMAQP, Method::kPSMAMP};
  cfg.bootstrap = 3;
  cfg.max_failure_rate = 1.0;
  auto a = run_bodyfat(data, cfg);
  cfg.threads = 3;
  auto b = run_bodyfat(data, cfg);
  REQUIRE(a.prediction.size() == 4);
  REQUIRE(a.weights.size() == 2);
  CHECK(a.predictor_names.size() == 13);
  for (std::size_t k = 0; k < a.prediction.size(); ++k) {
    CHECK(a.prediction[k].used + a.prediction[k].failed == 4);
    CHECK(a.prediction[k].mpe_out.mean == b.prediction[k].mpe_out.mean);
  }
  for (std::size_t k = 0; k < a.weights.size(); ++k) {
    CHECK(a.weights[k].weights.slopes.size() == 13);
    CHECK(a.weights[k].bootstrap.standard_errors == b.weights[k].bootstrap.standard_errors);
  }
  auto pt = bodyfat_prediction_table(a);
  auto wt = bodyfat_weight_table(a);
  CHECK(pt.csv_rows.size() == 4);
  CHECK(wt.text_rows.size() == 14);
  auto d1 = scratch_dir("bf1"), d2 = scratch_dir("bf2");
  emit_report({pt, wt}, d1.string());
  emit_report({bodyfat_prediction_table(b), bodyfat_weight_table(b)}, d2.string());
  for (const auto& e : fs::directory_iterator(d1)) CHECK(slurp(e.path()) == slurp(d2 / e.path().filename()));
}
