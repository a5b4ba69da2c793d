#pragma once

// Adaptive Simpson quadrature for smooth scalar or matrix-valued integrands.

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "gbdt/errors.hpp"

namespace gbdt {

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_floor = 1e-12;
  int max_depth = 40;
};

namespace detail {

template <class T>
double quad_norm(const T& v) {
  if constexpr (std::is_arithmetic_v<T>) {
    return std::abs(v);
  } else if constexpr (requires { v.norm(); }) {
    return v.norm();
  } else {
    return std::abs(v);
  }
}

template <class F, class T>
T simpson_step(const F& f, double a, double b, const T& fa, const T& fm,
               const T& fb, const T& whole, double tol, int depth,
               int max_depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const T flm = f(lm);
  const T frm = f(rm);
  const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const T delta = left + right - whole;
  if (quad_norm(delta) <= 15.0 * tol) {
    return T(left + right + delta / 15.0);
  }
  if (depth >= max_depth) {
    throw Error("adaptive Simpson: maximum recursion depth reached");
  }
  return T(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1,
                        max_depth) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1,
                        max_depth));
}

}  // namespace detail

/// Integrates f over [a, b]. The target absolute error is
/// max(rel_tol * |b - a| * max|f| at the three initial nodes, abs_floor).
/// Throws Error when the recursion depth is exhausted.
template <class F>
auto adaptive_simpson(const F& f, double a, double b,
                      const QuadratureOptions& opts = {}) {
  using T = std::decay_t<decltype(f(a))>;
  if (!(std::isfinite(a) && std::isfinite(b))) {
    throw InputError("adaptive Simpson: non-finite interval");
  }
  const T fa = f(a);
  const T fb = f(b);
  const T fm = f(0.5 * (a + b));
  if (a == b) return T(0.0 * fa);
  const T whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double scale =
      std::abs(b - a) * std::max({detail::quad_norm(fa), detail::quad_norm(fm),
                                  detail::quad_norm(fb)});
  const double tol = std::max(opts.rel_tol * scale, opts.abs_floor);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, 0,
                              opts.max_depth);
}

}  // namespace gbdt
