#include "smaq/kink_line.hpp"

#include <algorithm>
#include <cmath>

namespace smaq {

void KinkLine::clear() {
  kinks_.clear();
  left_slope_ = 0.0;
  total_jump_ = 0.0;
}

void KinkLine::add_check(double r, double d, double tau, std::ptrdiff_t id) {
  if (d == 0.0) return;
  // As t -> -inf the residual r - d t has the sign of d.
  left_slope_ += d > 0.0 ? -tau * d : (1.0 - tau) * d;
  const double jump = std::abs(d);
  total_jump_ += jump;
  kinks_.push_back({r / d, jump, id});
}

void KinkLine::add_abs(double s, double c, std::ptrdiff_t id) {
  if (c <= 0.0) return;
  left_slope_ -= c;
  total_jump_ += 2.0 * c;
  kinks_.push_back({s, 2.0 * c, id});
}

KinkLine::Minimum KinkLine::minimize(FlatRule rule) {
  std::sort(kinks_.begin(), kinks_.end(), [](const Kink& a, const Kink& b) {
    if (a.position != b.position) return a.position < b.position;
    return a.id < b.id;
  });
  Minimum out;
  if (kinks_.empty()) return out;

  const double tol = 1e-12 * total_jump_;
  const std::size_t m = kinks_.size();

  auto pick_interval = [&](double lo, double hi, std::size_t lo_first,
                           std::size_t lo_last, std::size_t hi_first,
                           std::size_t hi_last, bool lo_finite, bool hi_finite) {
    // Flat minimum set [lo, hi]; infinite ends are flagged.
    Minimum res;
    if (rule == FlatRule::kTowardZero && (!lo_finite || lo <= 0.0) &&
        (!hi_finite || hi >= 0.0)) {
      res.t = 0.0;
      if (lo_finite && lo == 0.0) {
        res.at_kink = true;
        res.first = lo_first;
        res.last = lo_last;
      } else if (hi_finite && hi == 0.0) {
        res.at_kink = true;
        res.first = hi_first;
        res.last = hi_last;
      }
      return res;
    }
    const bool take_lo =
        lo_finite && (!hi_finite || std::abs(lo) <= std::abs(hi));
    res.at_kink = true;
    if (take_lo) {
      res.t = lo;
      res.first = lo_first;
      res.last = lo_last;
    } else {
      res.t = hi;
      res.first = hi_first;
      res.last = hi_last;
    }
    return res;
  };

  // Flat from -inf up to the first kink.
  std::size_t g_end = 1;
  while (g_end < m && kinks_[g_end].position == kinks_[0].position) ++g_end;
  if (std::abs(left_slope_) <= tol) {
    return pick_interval(0.0, kinks_[0].position, 0, 0, 0, g_end, false, true);
  }

  double slope = left_slope_;
  std::size_t g_begin = 0;
  while (g_begin < m) {
    g_end = g_begin + 1;
    while (g_end < m && kinks_[g_end].position == kinks_[g_begin].position) ++g_end;
    for (std::size_t k = g_begin; k < g_end; ++k) slope += kinks_[k].jump;
    if (slope > tol) {
      out.t = kinks_[g_begin].position;
      out.at_kink = true;
      out.first = g_begin;
      out.last = g_end;
      return out;
    }
    if (slope >= -tol) {
      if (g_end == m) {
        return pick_interval(kinks_[g_begin].position, 0.0, g_begin, g_end, 0, 0,
                             true, false);
      }
      std::size_t h_end = g_end + 1;
      while (h_end < m && kinks_[h_end].position == kinks_[g_end].position) ++h_end;
      return pick_interval(kinks_[g_begin].position, kinks_[g_end].position,
                           g_begin, g_end, g_end, h_end, true, true);
    }
    g_begin = g_end;
  }
  // Unreachable for well-posed input: the right slope is nonnegative.
  out.t = kinks_.back().position;
  out.at_kink = true;
  out.first = m - 1;
  out.last = m;
  return out;
}

}  // namespace smaq
