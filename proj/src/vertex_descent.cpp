#include "smaq/vertex_descent.hpp"

#include "smaq/kink_line.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace smaq {

namespace {

double check(double u, double tau) { return u >= 0.0 ? tau * u : (tau - 1.0) * u; }

// Constraint ids: [0, n) data rows, [n, n + d) coordinate planes beta_j = 0,
// [n + d, ...) pseudo planes that pin directions along which F is flat.
class Walker {
public:
  Walker(const Matrix& x, const Vector& y, double tau, const Vector& penalty)
      : x_(x), y_(y), tau_(tau), penalty_(penalty), n_(x.rows()), d_(x.cols()) {}

  VertexDescentResult run(const Vector& start, int max_pivots) {
    beta_ = start;
    VertexDescentResult out;
    reach_vertex();
    out.pivots = pivot(max_pivots, out.certified);
    out.beta = best_beta_;
    out.objective = best_objective_;
    return out;
  }

private:
  Vector normal(Eigen::Index id) const {
    if (id < n_) return x_.row(id).transpose();
    if (id < n_ + d_) return Vector::Unit(d_, id - n_);
    return pseudo_normals_[static_cast<std::size_t>(id - n_ - d_)];
  }

  double offset(Eigen::Index id) const {
    if (id < n_) return y_(id);
    if (id < n_ + d_) return 0.0;
    return pseudo_offsets_[static_cast<std::size_t>(id - n_ - d_)];
  }

  double objective(const Vector& beta) const {
    return weighted_l1_objective(x_, y_, tau_, penalty_, beta);
  }

  void remember(const Vector& beta) {
    const double f = objective(beta);
    if (f < best_objective_) {
      best_objective_ = f;
      best_beta_ = beta;
    }
  }

  // Line through beta_ along u; returns the minimizer and fills the kink
  // list with each kink's |directional change|.
  KinkLine::Minimum line_search(const Vector& u, const std::vector<bool>& active) {
    line_.clear();
    const Vector xu = x_ * u;
    const Vector r = y_ - x_ * beta_;
    const double unorm = u.norm();
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (active[static_cast<std::size_t>(i)]) continue;
      if (std::abs(xu(i)) <= 1e-13 * x_.row(i).norm() * unorm) continue;
      line_.add_check(r(i), xu(i), tau_, i);
    }
    for (Eigen::Index j = 0; j < d_; ++j) {
      const double c = penalty_(j);
      if (c <= 0.0 || active[static_cast<std::size_t>(n_ + j)]) continue;
      if (std::abs(u(j)) <= 1e-13 * unorm) continue;
      line_.add_abs(-beta_(j) / u(j), c * std::abs(u(j)), n_ + j);
    }
    if (!line_.has_kinks()) return {};
    return line_.minimize(KinkLine::FlatRule::kNearestKink);
  }

  double kink_strength(Eigen::Index id, const Vector& u) const {
    if (id < n_) return std::abs(x_.row(id).dot(u)) / std::max(x_.row(id).norm(), 1e-300);
    return std::abs(u(id - n_));
  }

  Eigen::Index choose_entering(const KinkLine::Minimum& m, const Vector& u,
                               Eigen::Index exclude, bool bland) const {
    Eigen::Index best = -1;
    double best_strength = -1.0;
    for (std::size_t k = m.first; k < m.last; ++k) {
      const auto id = static_cast<Eigen::Index>(line_.kinks()[k].id);
      if (id == exclude || id < 0) continue;
      if (bland) {
        if (best < 0 || id < best) best = id;
        continue;
      }
      const double s = kink_strength(id, u);
      if (s > best_strength) {
        best_strength = s;
        best = id;
      }
    }
    return best;
  }

  void reach_vertex() {
    active_ids_.clear();
    std::vector<bool> active(static_cast<std::size_t>(n_ + d_), false);
    remember(beta_);
    while (static_cast<Eigen::Index>(active_ids_.size()) < d_) {
      const auto k = static_cast<Eigen::Index>(active_ids_.size());
      Matrix g(k, d_);
      for (Eigen::Index a = 0; a < k; ++a) g.row(a) = normal(active_ids_[static_cast<std::size_t>(a)]).transpose();
      Vector u;
      if (k == 0) {
        u = Vector::Unit(d_, 0);
      } else {
        const Eigen::LDLT<Matrix> gram(g * g.transpose());
        double best_norm = -1.0;
        for (Eigen::Index m = 0; m < d_; ++m) {
          const Vector cand = Vector::Unit(d_, m) - g.transpose() * gram.solve(g.col(m));
          const double nrm = cand.norm();
          if (nrm > best_norm) {
            best_norm = nrm;
            u = cand;
          }
        }
        u /= u.norm();
      }
      const KinkLine::Minimum m = line_search(u, active);
      if (!m.at_kink) {
        pseudo_normals_.push_back(u);
        pseudo_offsets_.push_back(u.dot(beta_));
        active_ids_.push_back(n_ + d_ + static_cast<Eigen::Index>(pseudo_normals_.size()) - 1);
        active.push_back(true);
        continue;
      }
      beta_ += m.t * u;
      const Eigen::Index id = choose_entering(m, u, -1, false);
      active_ids_.push_back(id);
      active[static_cast<std::size_t>(id)] = true;
    }
    remember(beta_);
  }

  int pivot(int max_pivots, bool& certified) {
    certified = false;
    const std::size_t total = static_cast<std::size_t>(n_ + d_) + pseudo_normals_.size();
    std::vector<bool> active(total, false);
    for (auto id : active_ids_) active[static_cast<std::size_t>(id)] = true;

    std::vector<bool> tried(total, false);
    int degenerate_run = 0;
    int pivots = 0;
    Matrix g(d_, d_);
    Vector b(d_);
    for (; pivots < max_pivots; ++pivots) {
      for (Eigen::Index a = 0; a < d_; ++a) {
        const auto id = active_ids_[static_cast<std::size_t>(a)];
        g.row(a) = normal(id).transpose();
        b(a) = offset(id);
      }
      const Eigen::PartialPivLU<Matrix> lu(g);
      const Vector beta = lu.solve(b);
      if (!beta.allFinite()) break;
      beta_ = beta;
      remember(beta_);

      // Subgradient of the free terms; active terms get dual values v.
      const Vector r = y_ - x_ * beta_;
      Vector free_grad = Vector::Zero(d_);
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (active[static_cast<std::size_t>(i)]) continue;
        const double psi = r(i) < 0.0 ? tau_ - 1.0 : tau_;
        free_grad.noalias() += psi * x_.row(i).transpose();
      }
      for (Eigen::Index j = 0; j < d_; ++j) {
        if (penalty_(j) <= 0.0 || active[static_cast<std::size_t>(n_ + j)]) continue;
        // 2c rho_{1/2}(-beta_j) has psi-weight c sign(-beta_j).
        free_grad(j) += beta_(j) > 0.0 ? -penalty_(j) : penalty_(j);
      }
      const Vector v = lu.transpose().solve(-free_grad);
      const double tol = 1e-10 * (1.0 + free_grad.lpNorm<Eigen::Infinity>());
      const bool bland = degenerate_run > 2 * d_;

      Eigen::Index leave_pos = -1;
      double worst = tol;
      double direction_sign = 0.0;
      for (Eigen::Index a = 0; a < d_; ++a) {
        const auto id = active_ids_[static_cast<std::size_t>(a)];
        if (id >= n_ + d_ || tried[static_cast<std::size_t>(id)]) continue;
        double w, t;
        if (id < n_) {
          w = 1.0;
          t = tau_;
        } else {
          w = 2.0 * penalty_(id - n_);
          t = 0.5;
          if (w <= 0.0) continue;
        }
        const double over = v(a) - w * t;
        const double under = w * (t - 1.0) - v(a);
        const double viol = std::max(over, under);
        if (viol > worst) {
          if (bland && leave_pos >= 0 && id > active_ids_[static_cast<std::size_t>(leave_pos)]) continue;
          worst = bland ? tol : viol;
          leave_pos = a;
          direction_sign = over > under ? -1.0 : 1.0;
        }
      }
      if (leave_pos < 0) {
        certified = std::none_of(tried.begin(), tried.end(), [](bool b2) { return b2; });
        break;
      }

      const auto leaving = active_ids_[static_cast<std::size_t>(leave_pos)];
      Vector e = Vector::Unit(d_, leave_pos);
      const Vector u = direction_sign * lu.solve(e);
      active[static_cast<std::size_t>(leaving)] = false;
      const KinkLine::Minimum m = line_search(u, active);
      const Eigen::Index entering = m.at_kink ? choose_entering(m, u, leaving, bland) : -1;
      if (entering < 0) {
        // The apparent violation came from a degenerate sign choice.
        active[static_cast<std::size_t>(leaving)] = true;
        tried[static_cast<std::size_t>(leaving)] = true;
        continue;
      }
      if (m.t == 0.0) {
        ++degenerate_run;
      } else {
        degenerate_run = 0;
        std::fill(tried.begin(), tried.end(), false);
      }
      active_ids_[static_cast<std::size_t>(leave_pos)] = entering;
      active[static_cast<std::size_t>(entering)] = true;
    }
    return pivots;
  }

  const Matrix& x_;
  const Vector& y_;
  double tau_;
  const Vector& penalty_;
  Eigen::Index n_;
  Eigen::Index d_;

  Vector beta_;
  Vector best_beta_;
  double best_objective_ = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> active_ids_;
  std::vector<Vector> pseudo_normals_;
  std::vector<double> pseudo_offsets_;
  KinkLine line_;
};

}  // namespace

double weighted_l1_objective(const Matrix& design, const Vector& response, double tau,
                             const Vector& penalty, const Vector& beta) {
  const Vector r = response - design * beta;
  double f = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) f += check(r(i), tau);
  for (Eigen::Index j = 0; j < beta.size(); ++j) f += penalty(j) * std::abs(beta(j));
  return f;
}

VertexDescentResult minimize_weighted_l1(const Matrix& design, const Vector& response,
                                         double tau, const Vector& penalty,
                                         const Vector& start, int max_pivots) {
  const Eigen::Index n = design.rows();
  const Eigen::Index d = design.cols();
  // Identical rows make every vertex degenerate; k copies of a row are one row scaled by k.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (design(a, j) != design(b, j)) return design(a, j) < design(b, j);
    }
    return response(a) < response(b);
  };
  auto row_equal = [&](Eigen::Index a, Eigen::Index b) {
    return response(a) == response(b) && design.row(a) == design.row(b);
  };
  std::sort(order.begin(), order.end(), row_less);
  std::vector<std::pair<Eigen::Index, int>> groups;
  for (auto i : order) {
    if (!groups.empty() && row_equal(groups.back().first, i)) {
      ++groups.back().second;
    } else {
      groups.emplace_back(i, 1);
    }
  }
  const auto m = static_cast<Eigen::Index>(groups.size());
  if (max_pivots <= 0) {
    max_pivots = 50 * static_cast<int>(m + d) + 100;
  }
  if (m == n) {
    Walker walker(design, response, tau, penalty);
    return walker.run(start, max_pivots);
  }
  std::sort(groups.begin(), groups.end());
  Matrix x(m, d);
  Vector y(m);
  for (Eigen::Index g = 0; g < m; ++g) {
    const auto [i, k] = groups[static_cast<std::size_t>(g)];
    x.row(g) = k * design.row(i);
    y(g) = k * response(i);
  }
  Walker walker(x, y, tau, penalty);
  auto out = walker.run(start, max_pivots);
  out.objective = weighted_l1_objective(design, response, tau, penalty, out.beta);
  return out;
}

}  // namespace smaq
