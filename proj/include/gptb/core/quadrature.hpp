#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace gptb {

namespace detail {

struct Panel {
  double est = 0.0;
  double err = 0.0;
};

template <typename F>
Panel gk_panel(F& f, double lo, double hi) {
  Panel p;
  p.est = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 0, 0.0, &p.err);
  return p;
}

// Bisect until the Kronrod error estimate meets max(abs_tol, rel_tol*|I|).
// The estimate has a roundoff floor that does not shrink with the panel, so
// bisection also stops once halving no longer reduces the combined estimate.
template <typename F>
double gk_adapt(F& f, double lo, double hi, Panel whole, double abs_tol, double rel_tol,
                unsigned depth) {
  if (depth == 0 || whole.err <= std::max(abs_tol, rel_tol * std::abs(whole.est))) return whole.est;
  const double mid = 0.5 * (lo + hi);
  const Panel left = gk_panel(f, lo, mid);
  const Panel right = gk_panel(f, mid, hi);
  if (left.err + right.err >= whole.err) return left.est + right.est;
  return gk_adapt(f, lo, mid, left, 0.5 * abs_tol, rel_tol, depth - 1) +
         gk_adapt(f, mid, hi, right, 0.5 * abs_tol, rel_tol, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G15/K31) on [lo, hi], split at any breakpoints
/// that fall strictly inside the interval. Pieces are summed left to right.
template <typename F>
double integrate(F&& f, double lo, double hi, std::vector<double> breakpoints = {},
                 double rel_tol = 1e-13, unsigned max_depth = 18, double abs_tol = 1e-15) {
  if (!(hi > lo)) return 0.0;
  std::vector<double> knots{lo};
  std::sort(breakpoints.begin(), breakpoints.end());
  for (double b : breakpoints) {
    if (b > knots.back() && b < hi) knots.push_back(b);
  }
  knots.push_back(hi);
  const double piece_tol = abs_tol / static_cast<double>(knots.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const auto whole = detail::gk_panel(f, knots[i], knots[i + 1]);
    total += detail::gk_adapt(f, knots[i], knots[i + 1], whole, piece_tol, rel_tol, max_depth);
  }
  return total;
}

}  // namespace gptb
