#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <limits>
#include <queue>
#include <span>
#include <string>

#include "magheat/error.hpp"

namespace magheat::quad {

/// Globally adaptive 15-point Gauss-Kronrod on [a, b]: the interval with the
/// largest error is bisected until the total error drops below both `abs_tol`
/// and `rel_tol * |value|` (or reaches rounding level), or the subdivision
/// budget (2^max_depth intervals, at most 4096) runs out. Throws NumericError
/// when the error estimate stays above `abs_tol`.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol,
                 unsigned max_depth = 15, const char* what = "integral",
                 double rel_tol = 1e-12) {
  if (a == b) return 0.0;
  using rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  struct Piece {
    double lo, hi, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  // Boost reports the error of the rule on [-1, 1]; rescale it to [lo, hi].
  auto piece = [&](double lo, double hi) {
    double err = 0.0;
    double v = rule::integrate(f, lo, hi, 0, 0.0, &err);
    return Piece{lo, hi, v, err * 0.5 * std::abs(hi - lo)};
  };
  const std::size_t budget = std::size_t(1) << std::min(max_depth, 12u);
  std::priority_queue<Piece> heap;
  heap.push(piece(a, b));
  double val = heap.top().value;
  double err = heap.top().error;
  double l1 = std::abs(val);
  auto target = [&] {
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() * l1;
    return std::min(abs_tol, std::max(rel_tol * std::abs(val), floor));
  };
  while (std::isfinite(val) && err > target() && heap.size() < budget) {
    const Piece worst = heap.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (mid <= std::min(worst.lo, worst.hi) || mid >= std::max(worst.lo, worst.hi)) break;
    heap.pop();
    const Piece left = piece(worst.lo, mid);
    const Piece right = piece(mid, worst.hi);
    val += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    l1 += std::abs(left.value) + std::abs(right.value) - std::abs(worst.value);
    heap.push(left);
    heap.push(right);
  }
  if (!std::isfinite(val) || err > abs_tol) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", err);
    throw NumericError(std::string("quadrature did not converge: ") + what +
                       " (error estimate " + buf + ")");
  }
  return val;
}

/// Same as `integrate` but splits [a, b] at the given interior breakpoints.
template <class F>
double integrate_split(F&& f, double a, double b, std::span<const double> breaks,
                       double abs_tol, const char* what = "integral",
                       double rel_tol = 1e-12) {
  double total = 0.0;
  double lo = a;
  for (double p : breaks) {
    if (p <= lo || p >= b) continue;
    total += integrate(f, lo, p, abs_tol, 15, what, rel_tol);
    lo = p;
  }
  total += integrate(f, lo, b, abs_tol, 15, what, rel_tol);
  return total;
}

} // namespace magheat::quad
