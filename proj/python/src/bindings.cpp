#include "smaq/averaging_pipeline.hpp"
#include "smaq/error.hpp"
#include "smaq/model_io.hpp"
#include "smaq/penalized_solver.hpp"
#include "smaq/simulation_lab.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace smaq;

namespace {

Dataset make_dataset(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw DataError("x and y have different numbers of rows");
  Dataset d;
  d.x = x;
  d.y = y;
  return d;
}

py::dict summary_dict(const SummaryRow& r) {
  py::dict d;
  d["method"] = method_name(r.method);
  d["tau"] = r.tau;
  d["used"] = r.used;
  d["failed"] = r.failed;
  auto put = [&](const char* key, const Statistic& s) { d[key] = py::make_tuple(s.mean, s.sd); };
  put("C", r.c);
  put("IC", r.ic);
  put("CF", r.cf);
  put("mpe_in", r.mpe_in);
  put("mpe_out", r.mpe_out);
  if (r.mee_in) put("mee_in", *r.mee_in);
  if (r.mee_out) put("mee_out", *r.mee_out);
  return d;
}

}  // namespace

PYBIND11_MODULE(_smaq, m) {
  m.doc() = "Semiparametric model averaging quantile prediction";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::enum_<Method>(m, "Method")
      .value("SMAQP", Method::kSMAQP)
      .value("PSMAQP", Method::kPSMAQP)
      .value("SMAMP", Method::kSMAMP)
      .value("PSMAMP", Method::kPSMAMP);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("tau", &FitConfig::tau)
      .def_readwrite("method", &FitConfig::method)
      .def_property(
          "cn_rule", [](const FitConfig& c) { return cn_rule_name(c.cn_rule); },
          [](FitConfig& c, const std::string& s) { c.cn_rule = parse_cn_rule(s); })
      .def_property(
          "msic_objective", [](const FitConfig& c) { return msic_objective_name(c.msic_objective); },
          [](FitConfig& c, const std::string& s) { c.msic_objective = parse_msic_objective(s); })
      .def_property(
          "pilot_rule", [](const FitConfig& c) { return pilot_rule_name(c.pilot_rule); },
          [](FitConfig& c, const std::string& s) { c.pilot_rule = parse_pilot_rule(s); })
      .def_property(
          "evaluation", [](const FitConfig& c) { return evaluation_mode_name(c.evaluation); },
          [](FitConfig& c, const std::string& s) { c.evaluation = parse_evaluation_mode(s); })
      .def_readwrite("bandwidth_overrides", &FitConfig::bandwidth_overrides)
      .def_readwrite("covariate_taus", &FitConfig::covariate_taus)
      .def_readwrite("scad_a", &FitConfig::scad_a)
      .def_readwrite("grid_size", &FitConfig::grid_size)
      .def_readwrite("grid_min_ratio", &FitConfig::grid_min_ratio)
      .def_readwrite("cv_folds", &FitConfig::cv_folds)
      .def_readwrite("cv_seed", &FitConfig::cv_seed)
      .def_readwrite("threads", &FitConfig::threads);

  py::class_<AveragingModel>(m, "Model")
      .def_property_readonly("intercept", [](const AveragingModel& a) { return a.weights.intercept; })
      .def_property_readonly("weights", [](const AveragingModel& a) { return Vector(a.weights.slopes); })
      .def_property_readonly("support", [](const AveragingModel& a) { return a.weights.support(); })
      .def_property_readonly("training_predictions",
                             [](const AveragingModel& a) { return Vector(a.training_predictions); })
      .def_property_readonly("bandwidths",
                             [](const AveragingModel& a) {
                               std::vector<double> h;
                               for (const auto& mm : a.marginals) h.push_back(mm.bandwidth());
                               return h;
                             })
      .def_property_readonly("selected_lambda",
                             [](const AveragingModel& a) -> py::object {
                               if (a.msic) return py::float_(a.msic->chosen_lambda);
                               if (a.cv) return py::float_(a.cv->chosen_lambda);
                               return py::none();
                             })
      .def_property_readonly("config", [](const AveragingModel& a) { return a.config; })
      .def("predict", [](const AveragingModel& a, const Matrix& x) { return predict(a, x); }, py::arg("x"))
      .def("to_json",
           [](const AveragingModel& a) { return serialize_model(StoredModel{a, {}, {}, false}); })
      .def_static("from_json", [](const std::string& s) { return deserialize_model(s).model; });

  m.def(
      "fit",
      [](const Matrix& x, const Vector& y, const FitConfig& config) {
        py::gil_scoped_release release;
        return fit(make_dataset(x, y), config);
      },
      py::arg("x"), py::arg("y"), py::arg("config") = FitConfig{});

  m.def("evaluate_mpe", &evaluate_mpe, py::arg("y"), py::arg("yhat"), py::arg("tau"));
  m.def("check_loss", &check_loss, py::arg("u"), py::arg("tau"));
  m.def(
      "scad_value", [](double x, double lambda, double a) { return scad_value(x, ScadPenalty{lambda, a}); },
      py::arg("x"), py::arg("lam"), py::arg("a") = 3.7);
  m.def(
      "scad_derivative",
      [](double x, double lambda, double a) { return scad_derivative(x, ScadPenalty{lambda, a}); }, py::arg("x"),
      py::arg("lam"), py::arg("a") = 3.7);
  m.def("epanechnikov", &epanechnikov, py::arg("u"));
  m.def(
      "pilot_bandwidth", [](const std::vector<double>& x) { return pilot_bandwidth(x); }, py::arg("x"));
  m.def("quantile_bandwidth", &quantile_bandwidth, py::arg("h_ls"), py::arg("tau"));
  m.def(
      "univariate_quantile_min",
      [](const std::vector<double>& r, const std::vector<double>& d, double tau, double l1) {
        return weighted_univariate_quantile_min(r, d, tau, l1);
      },
      py::arg("residuals"), py::arg("multipliers"), py::arg("tau"), py::arg("l1"));

  auto as_tuple = [](const Dataset& d) { return py::make_tuple(d.x, d.y); };
  m.def(
      "generate_example1",
      [as_tuple](Eigen::Index n, Eigen::Index p, const std::string& error, std::uint64_t seed) {
        return as_tuple(generate_example1(n, p, parse_error_law(error), seed));
      },
      py::arg("n"), py::arg("p"), py::arg("error") = "sn", py::arg("seed") = 1);
  m.def(
      "generate_example2",
      [as_tuple](Eigen::Index n, Eigen::Index p, const std::string& error, double t, std::uint64_t seed) {
        return as_tuple(generate_example2(n, p, parse_error_law(error), t, seed));
      },
      py::arg("n"), py::arg("p"), py::arg("error") = "sn", py::arg("t") = 1.0, py::arg("seed") = 1);
  m.def(
      "generate_example3",
      [as_tuple](Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
        return as_tuple(generate_example3(n, p, seed));
      },
      py::arg("n"), py::arg("p"), py::arg("seed") = 1);
  m.def(
      "example3_quantile", [](const Matrix& x, double tau) { return example3_quantiles(x, tau); }, py::arg("x"),
      py::arg("tau"));
  m.def(
      "sample_error",
      [](const std::string& law, Eigen::Index n, std::uint64_t seed) {
        return sample_error(parse_error_law(law), n, seed);
      },
      py::arg("law"), py::arg("n"), py::arg("seed") = 1);

  m.def(
      "run_monte_carlo",
      [](int example, Eigen::Index n_tr, const std::string& error, double tau, int replications, std::uint64_t seed,
         const std::vector<std::string>& methods, Eigen::Index n_te, int threads) {
        if (example < 1 || example > 3) throw ConfigError("example must be 1, 2 or 3");
        SimulationSpec spec;
        spec.example = static_cast<Example>(example);
        spec.n_tr = n_tr;
        spec.n_te = n_te;
        spec.error = parse_error_law(error);
        spec.tau = tau;
        spec.replications = replications;
        spec.seed = seed;
        std::vector<Method> ms;
        for (const auto& s : methods) ms.push_back(parse_method(s));
        MonteCarloResult res;
        {
          py::gil_scoped_release release;
          res = run_monte_carlo(spec, ms, threads);
        }
        py::list rows;
        for (const auto& r : res.summary) rows.append(summary_dict(r));
        return rows;
      },
      py::arg("example"), py::arg("n_tr"), py::arg("error") = "sn", py::arg("tau") = 0.5,
      py::arg("replications") = 10, py::arg("seed") = 1,
      py::arg("methods") = std::vector<std::string>{"PSMAQP"}, py::arg("n_te") = 100, py::arg("threads") = 1);
}
