#include "smaq/marginal_smoother.hpp"

#include "smaq/normal.hpp"
#include "smaq/parallel.hpp"
#include "smaq/vertex_descent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

namespace smaq {

double epanechnikov(double u) {
  const double v = 1.0 - u * u;
  return v > 0.0 ? 0.75 * v : 0.0;
}

double pilot_bandwidth(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 10) throw DataError("pilot bandwidth needs at least 10 observations");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    throw DataError("zero variance covariate");
  }
  return 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
}

double rule_of_thumb_bandwidth(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (y.size() != n) throw DataError("x and y differ in length");
  const double fallback = pilot_bandwidth(x);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  // Global quartic in the standardized covariate.
  Matrix z(static_cast<Eigen::Index>(n), 5);
  Vector yy(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double u = (x[i] - mean) / sd;
    double pw = 1.0;
    for (Eigen::Index k = 0; k < 5; ++k, pw *= u) z(r, k) = pw;
    yy(r) = y[i];
  }
  const Vector b = z.colPivHouseholderQr().solve(yy);
  const double sigma2 = (yy - z * b).squaredNorm() / static_cast<double>(n - 5);
  double curvature = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (x[i] - mean) / sd;
    const double m2 = (2.0 * b(2) + 6.0 * b(3) * u + 12.0 * b(4) * u * u) / (sd * sd);
    curvature += m2 * m2;
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double range = *hi - *lo;
  // 15 = C(K) for the Epanechnikov local linear fit.
  double h = std::pow(15.0 * sigma2 * range / curvature, 0.2);
  if (!(h > 0.0) || !std::isfinite(h)) h = std::isinf(h) ? 2.0 * range : fallback;
  return std::min(h, 2.0 * range);
}

double quantile_bandwidth(double h_ls, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (!(h_ls > 0.0)) throw ConfigError("pilot bandwidth must be positive");
  const double z = normal_quantile(tau);
  return h_ls * std::pow(tau * (1.0 - tau) / normal_pdf(z), 0.2);
}

namespace {

struct Window {
  std::vector<double> d;
  std::vector<double> w;
  std::vector<double> y;
};

template <class Pairs>
Window gather(const Pairs& pairs, double h, double x0) {
  Window win;
  pairs([&](double xi, double yi) {
    const double di = xi - x0;
    const double k = epanechnikov(di / h);
    if (k > 0.0) {
      win.d.push_back(di);
      win.w.push_back(k);
      win.y.push_back(yi);
    }
  });
  return win;
}

bool has_two_distinct(const std::vector<double>& d) {
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] != d[0]) return true;
  }
  return false;
}

LocalFit quantile_window_fit(const Window& win, double tau, double x0) {
  if (!has_two_distinct(win.d)) {
    throw BandwidthError("bandwidth too small at x0 = " + std::to_string(x0));
  }
  const auto m = static_cast<Eigen::Index>(win.d.size());
  Matrix design(m, 2);
  Vector response(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    design(i, 0) = win.w[k];
    design(i, 1) = win.w[k] * win.d[k];
    response(i) = win.w[k] * win.y[k];
  }
  const VertexDescentResult res =
      minimize_weighted_l1(design, response, tau, Vector::Zero(2), Vector::Zero(2));
  return {res.beta(0), res.beta(1)};
}

LocalFit mean_window_fit(const Window& win, double h, double x0) {
  double s0 = 0.0, s1 = 0.0, t0 = 0.0;
  for (std::size_t i = 0; i < win.d.size(); ++i) {
    s0 += win.w[i];
    s1 += win.w[i] * win.d[i];
    t0 += win.w[i] * win.y[i];
  }
  if (!(s0 > 0.0)) throw BandwidthError("bandwidth too small at x0 = " + std::to_string(x0));
  const double dbar = s1 / s0;
  const double ybar = t0 / s0;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < win.d.size(); ++i) {
    const double dc = win.d[i] - dbar;
    sxx += win.w[i] * dc * dc;
    sxy += win.w[i] * dc * (win.y[i] - ybar);
  }
  if (!(sxx > 1e-14 * s0 * h * h)) {
    throw BandwidthError("singular local design at x0 = " + std::to_string(x0));
  }
  const double slope = sxy / sxx;
  return {ybar - slope * dbar, slope};
}

}  // namespace

LocalFit fit_local_linear_quantile(std::span<const double> x, std::span<const double> y,
                                   double tau, double h, double x0) {
  if (x.size() != y.size()) throw DataError("x and y differ in length");
  if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
  const Window win = gather(
      [&](auto&& emit) {
        for (std::size_t i = 0; i < x.size(); ++i) emit(x[i], y[i]);
      },
      h, x0);
  return quantile_window_fit(win, tau, x0);
}

LocalFit fit_local_linear_mean(std::span<const double> x, std::span<const double> y, double h,
                               double x0) {
  if (x.size() != y.size()) throw DataError("x and y differ in length");
  if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
  const Window win = gather(
      [&](auto&& emit) {
        for (std::size_t i = 0; i < x.size(); ++i) emit(x[i], y[i]);
      },
      h, x0);
  return mean_window_fit(win, h, x0);
}

// ---- MarginalModel --------------------------------------------------------

MarginalModel::MarginalModel(int column, SmootherLoss loss, double tau, double bandwidth,
                             std::span<const double> x, std::span<const double> y)
    : column_(column), loss_(loss), tau_(tau), bandwidth_(bandwidth) {
  if (x.size() != y.size() || x.empty()) throw DataError("marginal model needs matching non-empty x, y");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  knots_.reserve(x.size());
  responses_.reserve(x.size());
  for (auto i : order) {
    knots_.push_back(x[i]);
    responses_.push_back(y[i]);
  }
  levels_.resize(knots_.size());
  slopes_.resize(knots_.size());
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (i > 0 && knots_[i] == knots_[i - 1]) {
      levels_[i] = levels_[i - 1];
      slopes_[i] = slopes_[i - 1];
      continue;
    }
    const LocalFit f = fit_at(knots_[i]);
    levels_[i] = f.level;
    slopes_[i] = f.slope;
  }
}

MarginalModel::MarginalModel(int column, SmootherLoss loss, double tau, double bandwidth,
                             std::vector<double> knots, std::vector<double> responses,
                             std::vector<double> levels, std::vector<double> slopes)
    : column_(column),
      loss_(loss),
      tau_(tau),
      bandwidth_(bandwidth),
      knots_(std::move(knots)),
      responses_(std::move(responses)),
      levels_(std::move(levels)),
      slopes_(std::move(slopes)) {
  const std::size_t n = knots_.size();
  if (n == 0 || responses_.size() != n || levels_.size() != n || slopes_.size() != n) {
    throw DataError("marginal model state has inconsistent lengths");
  }
  if (!std::is_sorted(knots_.begin(), knots_.end())) throw DataError("marginal knots must be sorted");
}

LocalFit MarginalModel::fit_at(double x0) const {
  double h = bandwidth_;
  for (int attempt = 0;; ++attempt) {
    const auto lo = std::upper_bound(knots_.begin(), knots_.end(), x0 - h);
    const auto hi = std::lower_bound(knots_.begin(), knots_.end(), x0 + h);
    const auto first = static_cast<std::size_t>(lo - knots_.begin());
    const auto last = static_cast<std::size_t>(hi - knots_.begin());
    const Window win = gather(
        [&](auto&& emit) {
          for (std::size_t i = first; i < last; ++i) emit(knots_[i], responses_[i]);
        },
        h, x0);
    try {
      return loss_ == SmootherLoss::kQuantile ? quantile_window_fit(win, tau_, x0)
                                              : mean_window_fit(win, h, x0);
    } catch (const BandwidthError& e) {
      if (attempt == 5) {
        throw BandwidthError("covariate " + std::to_string(column_ + 1) + ": " + e.what());
      }
      h *= 2.0;
    }
  }
}

double MarginalModel::evaluate(double x, EvaluationMode mode) const {
  if (!std::isfinite(x)) throw DataError("non-finite evaluation point");
  if (x < knots_.front()) return levels_.front() + slopes_.front() * (x - knots_.front());
  if (x > knots_.back()) return levels_.back() + slopes_.back() * (x - knots_.back());
  if (mode == EvaluationMode::kRefit) return fit_at(x).level;
  const auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
  const auto k = static_cast<std::size_t>(it - knots_.begin());
  if (knots_[k] == x) return levels_[k];
  const double t = (x - knots_[k - 1]) / (knots_[k] - knots_[k - 1]);
  return (1.0 - t) * levels_[k - 1] + t * levels_[k];
}

// ---- plan and build ---------------------------------------------------------

BandwidthPlan make_bandwidth_plan(const Dataset& data, double tau, SmootherLoss loss, PilotRule rule,
                                  const std::vector<double>& covariate_taus,
                                  const std::vector<double>& overrides) {
  const Matrix& x = data.x;
  const Eigen::Index p = x.cols();
  if (data.y.size() != x.rows()) throw DataError("response length does not match predictor rows");
  if (!covariate_taus.empty() && static_cast<Eigen::Index>(covariate_taus.size()) != p) {
    throw ConfigError("covariate tau list must have one entry per covariate");
  }
  if (!overrides.empty() && static_cast<Eigen::Index>(overrides.size()) != p) {
    throw ConfigError("bandwidth overrides must have one entry per covariate");
  }
  BandwidthPlan plan;
  plan.pilot.resize(p);
  plan.bandwidth.resize(p);
  plan.tau.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto k = static_cast<std::size_t>(j);
    plan.tau(j) = covariate_taus.empty() ? tau : covariate_taus[k];
    const Vector col = x.col(j);
    try {
      const std::span<const double> xs(col.data(), static_cast<std::size_t>(col.size()));
      plan.pilot(j) = rule == PilotRule::kNormalReference
                          ? pilot_bandwidth(xs)
                          : rule_of_thumb_bandwidth(xs, {data.y.data(), static_cast<std::size_t>(data.y.size())});
    } catch (const DataError& e) {
      throw DataError("covariate " + std::to_string(j + 1) + ": " + e.what());
    }
    if (!overrides.empty()) {
      if (!(overrides[k] > 0.0)) throw ConfigError("bandwidth overrides must be positive");
      plan.bandwidth(j) = overrides[k];
    } else if (loss == SmootherLoss::kQuantile) {
      plan.bandwidth(j) = quantile_bandwidth(plan.pilot(j), plan.tau(j));
    } else {
      plan.bandwidth(j) = plan.pilot(j);
    }
  }
  return plan;
}

MarginalFit build_marginal_models(const Dataset& data, const BandwidthPlan& plan,
                                  SmootherLoss loss, int threads) {
  const Eigen::Index p = data.p();
  const Eigen::Index n = data.n();
  if (plan.bandwidth.size() != p || plan.tau.size() != p) {
    throw ConfigError("bandwidth plan does not cover every covariate");
  }
  std::vector<std::optional<MarginalModel>> slots(static_cast<std::size_t>(p));
  const std::vector<double> y(data.y.data(), data.y.data() + n);
  parallel_for(static_cast<std::size_t>(p), threads, [&](std::size_t j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const Vector col = data.x.col(jj);
    slots[j].emplace(static_cast<int>(j), loss, plan.tau(jj), plan.bandwidth(jj),
                     std::span<const double>(col.data(), static_cast<std::size_t>(n)),
                     std::span<const double>(y));
  });

  MarginalFit out;
  out.fitted.resize(n, p);
  out.models.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    const MarginalModel& m = *slots[static_cast<std::size_t>(j)];
    // Map sorted-knot fits back to row order.
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = data.x(i, j);
      const auto it = std::lower_bound(m.knots().begin(), m.knots().end(), xi);
      out.fitted(i, j) = m.fitted_levels()[static_cast<std::size_t>(it - m.knots().begin())];
    }
    out.models.push_back(std::move(*slots[static_cast<std::size_t>(j)]));
  }
  return out;
}

}  // namespace smaq
