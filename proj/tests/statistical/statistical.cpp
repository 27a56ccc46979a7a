// Monte Carlo checks of statistical properties. Slow; run with
//   ctest -L statistical

#include "doctest.h"

#include "smaq/averaging_pipeline.hpp"
#include "smaq/marginal_smoother.hpp"
#include "smaq/penalized_solver.hpp"
#include "smaq/rng.hpp"
#include "smaq/simulation_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>
#include <vector>

using namespace smaq;

namespace {

int worker_threads() {
  if (const char* env = std::getenv("SMAQ_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

const SummaryRow& row_for(const MonteCarloResult& res, Method m) {
  for (const auto& r : res.summary)
    if (r.method == m) return r;
  throw std::runtime_error("method missing from summary");
}

}  // namespace

TEST_CASE("MSIC keeps the empty model on pure noise") {
  const Eigen::Index n = 400, p = 10;
  int empty = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    Rng rng(derive_seed(71, StreamId::kTrainCovariates, r));
    Matrix m(n, p);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.normal();
      y(i) = rng.normal();
    }
    const auto grid = log_spaced_grid(quantile_lambda_max(m, y, 0.5), 50, 1e-3);
    const auto sel = select_lambda_msic(m, y, 0.5, grid, cn_value(CnRule::kLogP, p));
    empty += sel.chosen_weights.df() == 0;
  }
  std::printf("pure noise: df = 0 in %d / 100\n", empty);
  CHECK(empty >= 90);
}

TEST_CASE("local quantile levels increase with tau") {
  const std::vector<double> taus{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const int instances = 200;
  int violations = 0;
  for (int r = 0; r < instances; ++r) {
    Rng rng(derive_seed(72, StreamId::kTrainCovariates, static_cast<std::uint64_t>(r)));
    const int n = 200 + 50 * (r % 5);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.uniform(-2.5, 2.5);
      y[i] = -std::sin(2 * x[i]) + rng.normal();
    }
    const double x0 = rng.uniform(-1.5, 1.5);
    const double h = 0.6;
    double prev = -1e300;
    bool ok = true;
    for (double tau : taus) {
      const double level = fit_local_linear_quantile(x, y, tau, h, x0).level;
      ok = ok && level >= prev;
      prev = level;
    }
    violations += !ok;
  }
  std::printf("tau monotonicity: %d / %d instances cross\n", violations, instances);
  CHECK(violations <= instances / 20);
}

TEST_CASE("median marginal converges to -sin(2x)") {
  const int n = 20000;
  Rng rng(73);
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform(-2.5, 2.5);
    y[i] = example1_component(1, x[i]) + rng.normal();
  }
  const double h = quantile_bandwidth(pilot_bandwidth(x), 0.5);
  const MarginalModel model(0, SmootherLoss::kQuantile, 0.5, h, x, y);
  for (double x0 : {-1.25, -0.6, 0.0, 0.7, 1.25}) {
    const double v = model.evaluate(x0);
    INFO("x0 = " << x0 << ", fit = " << v);
    CHECK(std::abs(v + std::sin(2 * x0)) < 0.1);
  }
}

TEST_CASE("marginal estimates improve from n = 100 to n = 400") {
  auto msd = [](Eigen::Index n) {
    double total = 0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
      const auto d = generate_example1(n, 4, ErrorLaw::kSN, 740 + static_cast<std::uint64_t>(r));
      const auto plan = make_bandwidth_plan(d, 0.5, SmootherLoss::kQuantile);
      const auto fitted = build_marginal_models(d, plan, SmootherLoss::kQuantile).fitted;
      // the marginal median is m_j up to a constant
      for (Eigen::Index j = 0; j < 4; ++j) {
        Vector truth(n);
        for (Eigen::Index i = 0; i < n; ++i) truth(i) = example1_component(static_cast<int>(j) + 1, d.x(i, j));
        Vector dev = fitted.col(j) - truth;
        dev.array() -= dev.mean();
        total += dev.squaredNorm() / static_cast<double>(n);
      }
    }
    return total / reps;
  };
  const double small = msd(100), large = msd(400);
  std::printf("marginal MSD: n=100 %.4f, n=400 %.4f\n", small, large);
  CHECK(large < small);
}

TEST_CASE("bootstrap standard errors are stable in B") {
  const auto d = generate_example1(150, 4, ErrorLaw::kSN, 75);
  FitConfig c;
  c.method = Method::kSMAQP;
  const auto b100 = bootstrap_weight_se(d, c, 100, 76, worker_threads());
  const auto b500 = bootstrap_weight_se(d, c, 500, 76, worker_threads());
  for (Eigen::Index k = 0; k < b100.standard_errors.size(); ++k) {
    const double a = b100.standard_errors(k), b = b500.standard_errors(k);
    INFO("coefficient " << k << ": B=100 " << a << ", B=500 " << b);
    CHECK(std::abs(a - b) <= 0.3 * b);
  }
}

TEST_CASE("example 3 oracle error falls with n") {
  std::vector<double> mee;
  for (Eigen::Index n : {200, 400, 800}) {
    SimulationSpec s;
    s.example = Example::kEx3;
    s.n_tr = n;
    s.n_te = 200;
    s.p = 5;  // exactly the true support
    s.tau = 0.5;
    s.replications = 100;
    s.seed = 77;
    const auto res = run_monte_carlo(s, {Method::kSMAQP}, worker_threads());
    mee.push_back(row_for(res, Method::kSMAQP).mee_out->mean);
  }
  std::printf("oracle MEE: %.4f %.4f %.4f\n", mee[0], mee[1], mee[2]);
  CHECK(mee[1] < mee[0]);
  CHECK(mee[2] < mee[1]);
}

TEST_CASE("quantile averaging wins most paired replications under heavy tails") {
  for (Example ex : {Example::kEx1, Example::kEx2}) {
    for (ErrorLaw e : {ErrorLaw::kT3, ErrorLaw::kMN}) {
      SimulationSpec s;
      s.example = ex;
      s.n_tr = 400;
      s.n_te = 100;
      s.error = e;
      s.tau = 0.5;
      s.replications = 50;
      s.seed = 78;
      const auto res = run_monte_carlo(s, {Method::kPSMAQP, Method::kPSMAMP}, worker_threads());
      int wins = 0, paired = 0;
      for (std::size_t r = 0; r < res.outcomes[0].size(); ++r) {
        const auto& q = res.outcomes[0][r];
        const auto& m = res.outcomes[1][r];
        if (!q || !m) continue;
        ++paired;
        wins += q->mpe_out < m->mpe_out;
      }
      std::printf("Ex%d %s: PSMAQP wins %d / %d\n", static_cast<int>(ex), error_law_name(e).c_str(), wins, paired);
      INFO("Ex" << static_cast<int>(ex) << " " << error_law_name(e) << ": " << wins << " / " << paired);
      CHECK(wins >= 0.8 * paired);
    }
  }
}
