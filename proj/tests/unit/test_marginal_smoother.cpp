#include "doctest.h"
#include "oracles.hpp"

#include "smaq/marginal_smoother.hpp"

#include <cmath>
#include <random>

using namespace smaq;

TEST_CASE("Epanechnikov kernel values") {
  CHECK(epanechnikov(0.0) == 0.75);
  CHECK(epanechnikov(1.0) == 0.0);
  CHECK(epanechnikov(-1.0) == 0.0);
  CHECK(epanechnikov(0.5) == doctest::Approx(0.5625));
  CHECK(epanechnikov(3.0) == 0.0);
  CHECK(epanechnikov(0.3) == epanechnikov(-0.3));
}

TEST_CASE("Epanechnikov moments by quadrature") {
  // Composite Simpson on [-1, 1]; the integrands are polynomials.
  const int m = 2000;
  const double h = 2.0 / m;
  double i0 = 0, i1 = 0, i2 = 0, k2 = 0;
  for (int k = 0; k <= m; ++k) {
    const double u = -1.0 + k * h;
    const double w = (k == 0 || k == m) ? 1 : (k % 2 ? 4 : 2);
    const double kv = epanechnikov(u);
    i0 += w * kv;
    i1 += w * u * kv;
    i2 += w * u * u * kv;
    k2 += w * kv * kv;
  }
  CHECK(std::abs(i0 * h / 3 - 1.0) < 1e-6);
  CHECK(std::abs(i1 * h / 3) < 1e-6);
  CHECK(std::abs(i2 * h / 3 - 0.2) < 1e-6);
  CHECK(std::abs(k2 * h / 3 - 0.6) < 1e-6);
}

TEST_CASE("pilot bandwidth rule") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  std::vector<double> x(200);
  for (auto& v : x) v = nd(gen);
  double mean = 0, ss = 0;
  for (double v : x) mean += v;
  mean /= 200;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / 199);
  for (auto& v : x) v = (v - mean) / sd;
  const double expected = 1.06 * std::pow(200.0, -0.2);
  CHECK(pilot_bandwidth(x) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.36737).epsilon(1e-4));
  for (auto& v : x) v *= 2;
  CHECK(pilot_bandwidth(x) == doctest::Approx(2 * expected).epsilon(1e-12));
  CHECK_THROWS_AS(pilot_bandwidth(std::vector<double>(50, 3.0)), DataError);
  CHECK_THROWS_AS(pilot_bandwidth(std::vector<double>{1, 2, 3}), DataError);
}

TEST_CASE("quantile-adjusted bandwidth") {
  // (0.25 / phi(0))^(1/5) with phi(0) = 1 / sqrt(2 pi).
  const double at_median = std::pow(0.25 * std::sqrt(2 * M_PI), 0.2);
  CHECK(quantile_bandwidth(1.0, 0.5) == doctest::Approx(at_median).epsilon(1e-12));
  CHECK(at_median == doctest::Approx(0.910764).epsilon(1e-5));
  CHECK(quantile_bandwidth(1.0, 0.75) == doctest::Approx(quantile_bandwidth(1.0, 0.25)).epsilon(1e-12));
  CHECK(quantile_bandwidth(2.0, 0.5) == doctest::Approx(2 * at_median).epsilon(1e-12));
  CHECK_THROWS_AS(quantile_bandwidth(1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(quantile_bandwidth(1.0, 0.0), ConfigError);
}

TEST_CASE("local linear quantile: exact cases") {
  std::vector<double> x(30), yc(30, 4.2), yl(30);
  for (int i = 0; i < 30; ++i) {
    x[i] = -1.0 + 2.0 * i / 29.0;
    yl[i] = 2.0 * x[i];
  }
  for (double tau : {0.1, 0.5, 0.9}) {
    const auto f = fit_local_linear_quantile(x, yc, tau, 0.4, 0.1);
    CHECK(f.level == doctest::Approx(4.2).epsilon(1e-12));
    CHECK(f.slope == doctest::Approx(0.0).scale(1).epsilon(1e-10));
  }
  const auto g = fit_local_linear_quantile(x, yl, 0.5, 0.4, 0.23);
  CHECK(g.level == doctest::Approx(0.46).epsilon(1e-10));
  CHECK(g.slope == doctest::Approx(2.0).epsilon(1e-10));
  CHECK_THROWS_AS(fit_local_linear_quantile(x, yl, 0.5, 0.01, 0.05), BandwidthError);
}

TEST_CASE("local linear quantile matches basic-solution enumeration") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> ux(-1, 1);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> x(50), y(50);
    for (int i = 0; i < 50; ++i) {
      x[i] = ux(gen);
      y[i] = std::sin(2 * x[i]) + 0.5 * nd(gen);
    }
    const double tau = 0.3, h = 0.7, x0 = ux(gen) * 0.5;
    const auto fit = fit_local_linear_quantile(x, y, tau, h, x0);
    std::vector<double> d, w, yy;
    for (int i = 0; i < 50; ++i) {
      const double k = epanechnikov((x[i] - x0) / h);
      if (k > 0) {
        d.push_back(x[i] - x0);
        w.push_back(k);
        yy.push_back(y[i]);
      }
    }
    double ours = 0;
    for (std::size_t i = 0; i < d.size(); ++i) ours += w[i] * oracle::rho(yy[i] - fit.level - fit.slope * d[i], tau);
    const double brute = oracle::local_linear_bruteforce(d, yy, w, tau);
    CHECK(std::abs(ours - brute) <= 1e-8);

    // Local minimality under coordinate perturbations.
    for (double da : {-1e-4, 1e-4}) {
      for (int coord = 0; coord < 2; ++coord) {
        double f = 0;
        const double a = fit.level + (coord == 0 ? da : 0), b = fit.slope + (coord == 1 ? da : 0);
        for (std::size_t i = 0; i < d.size(); ++i) f += w[i] * oracle::rho(yy[i] - a - b * d[i], tau);
        CHECK(f >= ours - 1e-10);
      }
    }
    // Shifting y shifts only the level.
    std::vector<double> ys(y);
    for (auto& v : ys) v += 3.5;
    const auto shifted = fit_local_linear_quantile(x, ys, tau, h, x0);
    double fs = 0;
    for (std::size_t i = 0; i < d.size(); ++i) fs += w[i] * oracle::rho(yy[i] + 3.5 - shifted.level - shifted.slope * d[i], tau);
    CHECK(std::abs(fs - ours) <= 1e-8);
  }
}

TEST_CASE("local linear mean: exact cases and normal equations") {
  std::vector<double> x(30), yc(30, -1.5), yl(30);
  for (int i = 0; i < 30; ++i) {
    x[i] = i / 29.0;
    yl[i] = 3.0 + 2.0 * x[i];
  }
  const auto c = fit_local_linear_mean(x, yc, 0.3, 0.4);
  CHECK(c.level == doctest::Approx(-1.5).epsilon(1e-13));
  CHECK(std::abs(c.slope) < 1e-12);
  const auto l = fit_local_linear_mean(x, yl, 0.3, 0.4);
  CHECK(l.level == doctest::Approx(3.8).epsilon(1e-12));
  CHECK(l.slope == doctest::Approx(2.0).epsilon(1e-12));

  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  std::vector<double> xr(30), yr(30);
  for (int i = 0; i < 30; ++i) {
    xr[i] = nd(gen);
    yr[i] = nd(gen);
  }
  const double h = 1.5, x0 = 0.2;
  const auto fit = fit_local_linear_mean(xr, yr, h, x0);
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  for (int i = 0; i < 30; ++i) {
    const double w = epanechnikov((xr[i] - x0) / h);
    const Eigen::Vector2d z(1.0, xr[i] - x0);
    a += w * z * z.transpose();
    b += w * z * yr[i];
  }
  const Eigen::Vector2d sol = a.ldlt().solve(b);
  CHECK(std::abs(fit.level - sol(0)) < 1e-10);
  CHECK(std::abs(fit.slope - sol(1)) < 1e-10);
  CHECK_THROWS_AS(fit_local_linear_mean(xr, yr, 1e-6, 100.0), BandwidthError);
}

TEST_CASE("marginal model: storage, evaluation and extrapolation") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> ux(-2.5, 2.5);
  std::normal_distribution<double> nd;
  const int n = 300;
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = ux(gen);
    y[i] = -std::sin(2 * x[i]) + 0.3 * nd(gen);
  }
  Dataset data;
  data.x = Eigen::Map<Matrix>(x.data(), n, 1);
  data.y = Eigen::Map<Vector>(y.data(), n);
  const auto plan = make_bandwidth_plan(data, 0.5, SmootherLoss::kQuantile);
  const auto fit = build_marginal_models(data, plan, SmootherLoss::kQuantile);
  const auto& m = fit.models[0];
  REQUIRE(m.knots().size() == static_cast<std::size_t>(n));
  for (int i = 0; i < n; i += 17) {
    CHECK(m.evaluate(x[i]) == fit.fitted(i, 0));
  }
  const double over = m.support_max() + 0.3;
  CHECK(m.evaluate(over) ==
        doctest::Approx(m.fitted_levels().back() + m.fitted_slopes().back() * 0.3));
  const double under = m.support_min() - 0.2;
  CHECK(m.evaluate(under) ==
        doctest::Approx(m.fitted_levels().front() - m.fitted_slopes().front() * 0.2));
  CHECK_THROWS_AS(m.evaluate(std::nan("")), DataError);
  for (double v : m.fitted_levels()) CHECK(std::isfinite(v));
  // Interpolation mode reproduces knots and stays between neighbours.
  CHECK(m.evaluate(m.knots()[10], EvaluationMode::kInterpolate) == m.fitted_levels()[10]);
}

TEST_CASE("sparse edges widen the bandwidth locally") {
  std::vector<double> x{0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 1.0};
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * 2;
  const MarginalModel m(0, SmootherLoss::kQuantile, 0.5, 0.05, x, y);
  CHECK(std::isfinite(m.fitted_levels().back()));
  CHECK(m.fitted_levels().back() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("single-covariate noiseless fit tracks the curve") {
  const int n = 400;
  Dataset data;
  data.x.resize(n, 1);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.x(i, 0) = -2.0 + 4.0 * i / (n - 1);
    data.y(i) = std::tanh(data.x(i, 0));
  }
  const auto plan = make_bandwidth_plan(data, 0.5, SmootherLoss::kQuantile);
  const auto fit = build_marginal_models(data, plan, SmootherLoss::kQuantile);
  // Local linear bias is O(h^2 m''), here below 0.02 everywhere.
  CHECK((fit.fitted.col(0) - data.y).cwiseAbs().maxCoeff() < 0.02);
}
