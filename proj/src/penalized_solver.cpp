#include "smaq/penalized_solver.hpp"

#include "smaq/error.hpp"
#include "smaq/kink_line.hpp"
#include "smaq/rng.hpp"
#include "smaq/vertex_descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smaq {

double check_loss(double u, double tau) { return u >= 0.0 ? tau * u : (tau - 1.0) * u; }

double check_loss_sum(const Vector& residuals, double tau) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) s += check_loss(residuals(i), tau);
  return s;
}

double scad_value(double x, const ScadPenalty& pen) {
  const double lam = pen.lambda;
  const double a = pen.a;
  if (x <= lam) return lam * x;
  if (x <= a * lam) return -(x * x - 2.0 * a * lam * x + lam * lam) / (2.0 * (a - 1.0));
  return (a + 1.0) * lam * lam / 2.0;
}

double scad_derivative(double x, const ScadPenalty& pen) {
  const double lam = pen.lambda;
  if (x <= lam) return lam;
  return std::max(pen.a * lam - x, 0.0) / (pen.a - 1.0);
}

std::vector<int> WeightVector::support() const {
  std::vector<int> s;
  for (Eigen::Index j = 0; j < slopes.size(); ++j) {
    if (std::abs(slopes(j)) > kSupportThreshold) s.push_back(static_cast<int>(j));
  }
  return s;
}

namespace {

KinkLine& scratch_line() {
  thread_local KinkLine line;
  return line;
}

// tau-quantile of the values, resolved toward 0 on flat stretches.
double exact_quantile(const Vector& values, double tau) {
  KinkLine& line = scratch_line();
  line.clear();
  for (Eigen::Index i = 0; i < values.size(); ++i) line.add_check(values(i), 1.0, tau);
  return line.minimize(KinkLine::FlatRule::kTowardZero).t;
}

double penalty_sum(const Vector& slopes, const ScadPenalty& pen) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < slopes.size(); ++j) s += scad_value(std::abs(slopes(j)), pen);
  return s;
}

void validate_design(const Matrix& design, const Vector& y) {
  if (design.rows() != y.size()) {
    throw DataError("design has " + std::to_string(design.rows()) + " rows but response has " +
                    std::to_string(y.size()));
  }
  if (!design.allFinite() || !y.allFinite()) throw DataError("non-finite design or response");
}

void snap_small(WeightVector& w) {
  for (Eigen::Index j = 0; j < w.slopes.size(); ++j) {
    if (std::abs(w.slopes(j)) < WeightVector::kSupportThreshold) w.slopes(j) = 0.0;
  }
}

class QuantileCoordinateDescent {
public:
  QuantileCoordinateDescent(const Matrix& m, const Vector& y, double tau, const ScadPenalty& pen)
      : m_(m), y_(y), tau_(tau), pen_(pen), n_(static_cast<double>(m.rows())) {}

  void reset(const WeightVector& w) {
    w_ = w;
    r_ = y_ - m_ * w_.slopes;
    r_.array() -= w_.intercept;
  }

  double objective() const {
    return check_loss_sum(r_, tau_) + n_ * penalty_sum(w_.slopes, pen_);
  }

  const WeightVector& weights() const { return w_; }

  double sweep() {
    double change = 0.0;
    r_.array() += w_.intercept;
    const double w0 = exact_quantile(r_, tau_);
    r_.array() -= w0;
    change = std::abs(w0 - w_.intercept);
    w_.intercept = w0;

    KinkLine& line = scratch_line();
    for (Eigen::Index j = 0; j < m_.cols(); ++j) {
      const auto col = m_.col(j);
      const double wj = w_.slopes(j);
      const double c = n_ * scad_derivative(std::abs(wj), pen_);
      if (wj == 0.0 && zero_is_optimal(col, c)) continue;
      line.clear();
      bool any = false;
      for (Eigen::Index i = 0; i < col.size(); ++i) {
        if (col(i) != 0.0) any = true;
        line.add_check(r_(i) + col(i) * wj, col(i), tau_);
      }
      if (!any) continue;  // dead column; its weight stays put
      line.add_abs(0.0, c);
      const double delta = line.minimize(KinkLine::FlatRule::kTowardZero).t;
      if (delta != wj) {
        r_.noalias() -= (delta - wj) * col;
        change = std::max(change, std::abs(delta - wj));
        w_.slopes(j) = delta;
      }
    }
    return change;
  }

  // Exact minimization of the majorizer sum rho + sum c_j |w_j| with
  // c_j = n p'_lambda(|w_j|) frozen at the current point.
  bool polish() {
    const Eigen::Index p = m_.cols();
    if (x_full_.size() == 0) {
      x_full_.resize(m_.rows(), p + 1);
      x_full_.col(0).setOnes();
      x_full_.rightCols(p) = m_;
    }
    Vector c(p + 1);
    c(0) = 0.0;
    Vector start(p + 1);
    start(0) = w_.intercept;
    for (Eigen::Index j = 0; j < p; ++j) {
      c(j + 1) = n_ * scad_derivative(std::abs(w_.slopes(j)), pen_);
      start(j + 1) = w_.slopes(j);
    }
    const VertexDescentResult res = minimize_weighted_l1(x_full_, y_, tau_, c, start);
    WeightVector cand{res.beta(0), res.beta.tail(p)};
    const double before = objective();
    const WeightVector saved = w_;
    reset(cand);
    const double after = objective();
    if (after < before - 1e-12 * std::max(1.0, std::abs(before))) return true;
    reset(saved);
    return false;
  }

private:
  bool zero_is_optimal(const Eigen::Ref<const Vector>& col, double c) const {
    double up = c;
    double down = c;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      const double mi = col(i);
      const double ri = r_(i);
      if (ri > 0.0) {
        up -= tau_ * mi;
        down += tau_ * mi;
      } else if (ri < 0.0) {
        up += (1.0 - tau_) * mi;
        down -= (1.0 - tau_) * mi;
      } else {
        up += std::max((1.0 - tau_) * mi, -tau_ * mi);
        down += std::max(tau_ * mi, (tau_ - 1.0) * mi);
      }
    }
    return up >= 0.0 && down >= 0.0;
  }

  const Matrix& m_;
  const Vector& y_;
  double tau_;
  ScadPenalty pen_;
  double n_;
  WeightVector w_;
  Vector r_;
  Matrix x_full_;
};

}  // namespace

double weighted_univariate_quantile_min(std::span<const double> residuals,
                                        std::span<const double> multipliers, double tau,
                                        double l1_weight) {
  if (residuals.size() != multipliers.size()) {
    throw DataError("residuals and multipliers differ in length");
  }
  KinkLine& line = scratch_line();
  line.clear();
  bool any = false;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    if (multipliers[i] != 0.0) any = true;
    line.add_check(residuals[i], multipliers[i], tau);
  }
  if (!any) throw NumericalError("dead coordinate: every multiplier is zero");
  line.add_abs(0.0, l1_weight);
  return line.minimize(KinkLine::FlatRule::kTowardZero).t;
}

double penalized_quantile_objective(const Matrix& design, const Vector& y, double tau,
                                    const ScadPenalty& pen, const WeightVector& w) {
  Vector r = y - design * w.slopes;
  r.array() -= w.intercept;
  return check_loss_sum(r, tau) +
         static_cast<double>(design.rows()) * penalty_sum(w.slopes, pen);
}

PenalizedFit solve_penalized_quantile(const Matrix& design, const Vector& y, double tau,
                                      const ScadPenalty& pen, const WeightVector& init,
                                      const SolverOptions& options) {
  validate_design(design, y);
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (design.rows() <= 2) throw DataError("need more than 2 observations");
  WeightVector start = init;
  if (start.slopes.size() == 0) start.slopes = Vector::Zero(design.cols());
  if (start.slopes.size() != design.cols()) throw DataError("initial weights have wrong length");

  QuantileCoordinateDescent cd(design, y, tau, pen);
  cd.reset(start);
  PenalizedFit out;
  SolverReport& rep = out.report;
  rep.objective_trace.push_back(cd.objective());

  while (rep.sweeps < options.max_sweeps) {
    const double change = cd.sweep();
    ++rep.sweeps;
    rep.objective_trace.push_back(cd.objective());
    if (change < options.tolerance) {
      if (options.polish && cd.polish()) {
        rep.objective_trace.push_back(cd.objective());
        continue;
      }
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged && options.polish && cd.polish()) {
    rep.objective_trace.push_back(cd.objective());
  }

  out.weights = cd.weights();
  snap_small(out.weights);
  rep.final_objective = penalized_quantile_objective(design, y, tau, pen, out.weights);
  return out;
}

double quantile_lambda_max(const Matrix& design, const Vector& y, double tau) {
  const double q = exact_quantile(y, tau);
  Vector psi(y.size());
  std::vector<Eigen::Index> ties;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == q) {
      ties.push_back(i);
      continue;
    }
    psi(i) = y(i) < q ? tau - 1.0 : tau;
    sum += psi(i);
  }
  // residuals at the quantile take whatever keeps the intercept stationary
  if (!ties.empty()) {
    const double share = std::clamp(-sum / static_cast<double>(ties.size()), tau - 1.0, tau);
    for (auto i : ties) psi(i) = share;
  }
  const Vector score = design.transpose() * psi / static_cast<double>(y.size());
  const double lmax = score.size() ? score.lpNorm<Eigen::Infinity>() : 0.0;
  return lmax > 0.0 ? lmax : 1e-8;
}

std::vector<double> log_spaced_grid(double lambda_max, int size, double min_ratio) {
  if (size < 1) throw ConfigError("lambda grid size must be at least 1");
  if (!(lambda_max > 0.0)) throw ConfigError("lambda_max must be positive");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw ConfigError("grid ratio must lie in (0, 1]");
  std::vector<double> grid(static_cast<std::size_t>(size));
  if (size == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double lo = std::log(lambda_max * min_ratio);
  const double hi = std::log(lambda_max);
  for (int k = 0; k < size; ++k) {
    grid[static_cast<std::size_t>(k)] = std::exp(lo + (hi - lo) * k / (size - 1));
  }
  grid.back() = lambda_max;
  return grid;
}

double cn_value(CnRule rule, Eigen::Index p) {
  return rule == CnRule::kOne ? 1.0 : std::log(static_cast<double>(p));
}

MsicSelection select_lambda_msic(const Matrix& design, const Vector& y, double tau,
                                 const std::vector<double>& grid, double cn, double scad_a,
                                 const SolverOptions& options, MsicObjective objective) {
  if (grid.empty()) throw ConfigError("lambda grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("lambda grid must be ascending");
  const auto n = static_cast<double>(design.rows());
  MsicSelection sel;
  sel.lambda_grid = grid;
  sel.cn = cn;
  sel.msic_values.assign(grid.size(), 0.0);
  sel.df_per_lambda.assign(grid.size(), 0);
  std::vector<PenalizedFit> fits(grid.size());

  WeightVector warm = WeightVector::zeros(design.cols());
  for (std::size_t k = grid.size(); k-- > 0;) {
    const ScadPenalty pen{grid[k], scad_a};
    fits[k] = solve_penalized_quantile(design, y, tau, pen, warm, options);
    warm = fits[k].weights;
    const WeightVector& w = fits[k].weights;
    const double q = objective == MsicObjective::kPenalized
                         ? fits[k].report.final_objective
                         : check_loss_sum((y - design * w.slopes).array() - w.intercept, tau);
    if (!(q > 0.0)) {
      throw NumericalError("degenerate objective: Q(w) <= 0 at lambda = " +
                           std::to_string(grid[k]));
    }
    const int df = fits[k].weights.df();
    sel.df_per_lambda[k] = df;
    sel.msic_values[k] = std::log(q) + df * cn * std::log(n) / (2.0 * n);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double slack = 1e-12 * std::max(1.0, std::abs(sel.msic_values[best]));
    if (sel.msic_values[k] < sel.msic_values[best] - slack) best = k;
  }
  sel.chosen_lambda = grid[best];
  sel.chosen_msic = sel.msic_values[best];
  sel.chosen_weights = fits[best].weights;
  sel.chosen_report = fits[best].report;
  return sel;
}

// ---- least squares ------------------------------------------------------------

namespace {

struct Standardized {
  Matrix z;
  Vector center;
  Vector scale;  // 0 marks a constant column
  Vector yc;
  double ymean = 0.0;
};

Standardized standardize(const Matrix& m, const Vector& y) {
  Standardized s;
  const auto n = static_cast<double>(m.rows());
  s.center = m.colwise().mean().transpose();
  s.z = m.rowwise() - s.center.transpose();
  s.scale = (s.z.colwise().squaredNorm().array() / n).sqrt().transpose();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (s.scale(j) > 1e-12 * std::max(1.0, std::abs(s.center(j)))) {
      s.z.col(j) /= s.scale(j);
    } else {
      s.scale(j) = 0.0;
      s.z.col(j).setZero();
    }
  }
  s.ymean = y.mean();
  s.yc = y.array() - s.ymean;
  return s;
}

double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// argmin_b (b - z)^2 / 2 + p_lambda(|b|) for a unit-variance column.
double scad_threshold(double z, const ScadPenalty& pen) {
  const double lam = pen.lambda;
  const double az = std::abs(z);
  if (az <= 2.0 * lam) return soft(z, lam);
  if (az <= pen.a * lam) return soft(z, pen.a * lam / (pen.a - 1.0)) / (1.0 - 1.0 / (pen.a - 1.0));
  return z;
}

}  // namespace

double least_squares_lambda_max(const Matrix& design, const Vector& y) {
  const Standardized s = standardize(design, y);
  const Vector score = s.z.transpose() * s.yc / static_cast<double>(design.rows());
  const double lmax = score.size() ? score.lpNorm<Eigen::Infinity>() : 0.0;
  return lmax > 0.0 ? lmax : 1e-8;
}

PenalizedFit solve_penalized_least_squares(const Matrix& design, const Vector& y,
                                           const ScadPenalty& pen,
                                           const WeightVector* warm_start,
                                           const LeastSquaresOptions& options) {
  validate_design(design, y);
  if (design.rows() <= 2) throw DataError("need more than 2 observations");
  const Standardized s = standardize(design, y);
  const auto n = static_cast<double>(design.rows());
  const Eigen::Index p = design.cols();

  Vector b = Vector::Zero(p);
  if (warm_start && warm_start->slopes.size() == p) {
    b = warm_start->slopes.cwiseProduct(s.scale);
  }
  Vector r = s.yc - s.z * b;
  auto objective = [&] {
    double pen_sum = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) pen_sum += scad_value(std::abs(b(j)), pen);
    return r.squaredNorm() / (2.0 * n) + pen_sum;
  };

  PenalizedFit out;
  SolverReport& rep = out.report;
  rep.objective_trace.push_back(objective());
  while (rep.sweeps < options.max_sweeps) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (s.scale(j) == 0.0) continue;
      const double z = s.z.col(j).dot(r) / n + b(j);
      const double bj = scad_threshold(z, pen);
      if (bj != b(j)) {
        r.noalias() -= (bj - b(j)) * s.z.col(j);
        change = std::max(change, std::abs(bj - b(j)));
        b(j) = bj;
      }
    }
    ++rep.sweeps;
    rep.objective_trace.push_back(objective());
    if (change < options.tolerance) {
      rep.converged = true;
      break;
    }
  }
  rep.final_objective = objective();

  WeightVector& w = out.weights;
  w.slopes = Vector::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (s.scale(j) > 0.0) w.slopes(j) = b(j) / s.scale(j);
  }
  snap_small(w);
  w.intercept = s.ymean - s.center.dot(w.slopes);
  return out;
}

CvSelection select_lambda_cv(const Matrix& design, const Vector& y,
                             const std::vector<double>& grid, int folds, std::uint64_t seed,
                             double scad_a, const LeastSquaresOptions& options) {
  if (grid.empty()) throw ConfigError("lambda grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("lambda grid must be ascending");
  const Eigen::Index n = design.rows();
  if (folds < 2 || folds > n) throw ConfigError("cross-validation folds must lie in [2, n]");

  Rng rng(derive_seed(seed, StreamId::kCrossValidation, 0));
  const auto perm = rng.permutation(static_cast<std::size_t>(n));
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) fold_of[perm[i]] = static_cast<int>(i % folds);

  CvSelection sel;
  sel.lambda_grid = grid;
  sel.cv_error.assign(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    Matrix mt(static_cast<Eigen::Index>(train.size()), design.cols());
    Vector yt(static_cast<Eigen::Index>(train.size()));
    for (std::size_t k = 0; k < train.size(); ++k) {
      mt.row(static_cast<Eigen::Index>(k)) = design.row(train[k]);
      yt(static_cast<Eigen::Index>(k)) = y(train[k]);
    }
    WeightVector warm = WeightVector::zeros(design.cols());
    for (std::size_t k = grid.size(); k-- > 0;) {
      const PenalizedFit fit =
          solve_penalized_least_squares(mt, yt, ScadPenalty{grid[k], scad_a}, &warm, options);
      warm = fit.weights;
      double sse = 0.0;
      for (const auto i : test) {
        const double e = y(i) - fit.weights.intercept - design.row(i).dot(fit.weights.slopes);
        sse += e * e;
      }
      sel.cv_error[k] += sse / static_cast<double>(n);
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double slack = 1e-12 * std::max(1.0, sel.cv_error[best]);
    if (sel.cv_error[k] < sel.cv_error[best] - slack) best = k;
  }
  sel.chosen_lambda = grid[best];

  WeightVector warm = WeightVector::zeros(design.cols());
  PenalizedFit fit;
  for (std::size_t k = grid.size(); k-- > best;) {
    fit = solve_penalized_least_squares(design, y, ScadPenalty{grid[k], scad_a}, &warm, options);
    warm = fit.weights;
  }
  sel.chosen_weights = fit.weights;
  sel.chosen_report = fit.report;
  return sel;
}

}  // namespace smaq
