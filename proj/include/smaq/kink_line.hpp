#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smaq {

/// Exact minimizer of a convex piecewise-linear function of one variable t,
///
///   f(t) = sum_k rho_{tau_k}(r_k - d_k t) + sum_m c_m |t - s_m|,
///
/// built term by term. Every kink carries the caller's term id so that
/// vertex-walking algorithms can tell which constraint became active.
/// Buffers are reused across calls; one instance per thread.
class KinkLine {
public:
  enum class FlatRule {
    kTowardZero,  // flat minimum set containing 0 -> return 0
    kNearestKink  // always return a kink, the one closest to 0
  };

  struct Minimum {
    double t = 0.0;
    bool at_kink = false;
    std::size_t first = 0;  // kink range [first, last) into kinks()
    std::size_t last = 0;
  };

  struct Kink {
    double position;
    double jump;
    std::ptrdiff_t id;
  };

  void clear();

  /// Adds rho_tau(r - d t). Terms with d == 0 only shift f by a constant.
  void add_check(double r, double d, double tau, std::ptrdiff_t id = -1);

  /// Adds c |t - s| for c >= 0.
  void add_abs(double s, double c, std::ptrdiff_t id = -1);

  bool has_kinks() const { return !kinks_.empty(); }

  /// Returns a global minimizer; requires the function to be bounded below,
  /// which holds whenever at least one kink has been added.
  Minimum minimize(FlatRule rule);

  /// Kinks sorted by position; valid after minimize().
  std::span<const Kink> kinks() const { return kinks_; }

private:
  std::vector<Kink> kinks_;
  double left_slope_ = 0.0;
  double total_jump_ = 0.0;
};

}  // namespace smaq
