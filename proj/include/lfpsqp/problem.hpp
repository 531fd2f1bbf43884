#pragma once
#ifndef LFPSQP_PROBLEM_HPP
#define LFPSQP_PROBLEM_HPP

#include "lfpsqp/deriv.hpp"
#include "lfpsqp/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace lfpsqp {

/// User statement of
///
///   min f(x)  s.t.  c(x) = 0,  d_lower <= d(x) <= d_upper,  x_lower <= x <= x_upper
///
/// with x in R^n, c: R^n -> R^m and d: R^n -> R^p. Empty bound vectors mean
/// "unbounded"; individual entries may be +-infinity.
///
/// Derivatives are supplied through `derivs`, which works on the stacked
/// constraint map g(x) = (c(x), d(x)) of length m + p.
struct ProblemSpec {
  Index n = 0;
  std::function<double(const Vec&)> f;

  Index m = 0;
  std::function<Vec(const Vec&)> c;

  Index p = 0;
  std::function<Vec(const Vec&)> d;

  Vec x_lower;
  Vec x_upper;
  Vec d_lower;
  Vec d_upper;

  DerivativeOracle derivs;

  Vec lower_x() const { return x_lower.size() ? x_lower : Vec::Constant(n, -kInf); }
  Vec upper_x() const { return x_upper.size() ? x_upper : Vec::Constant(n, kInf); }
  Vec lower_d() const { return d_lower.size() ? d_lower : Vec::Constant(p, -kInf); }
  Vec upper_d() const { return d_upper.size() ? d_upper : Vec::Constant(p, kInf); }

  /// Stacked constraint map (c(x), d(x)).
  Vec constraints(const Vec& x) const {
    Vec g(m + p);
    if (m > 0) g.head(m) = c(x);
    if (p > 0) g.tail(p) = d(x);
    return g;
  }

  void validate() const {
    if (n < 1) throw Error(Errc::invalid_argument, "problem dimension must be >= 1");
    if (m < 0 || p < 0) throw Error(Errc::invalid_argument, "constraint counts must be >= 0");
    if (!f) throw Error(Errc::invalid_argument, "objective callback missing");
    if (m > 0 && !c) throw Error(Errc::invalid_argument, "equality constraint callback missing");
    if (p > 0 && !d) throw Error(Errc::invalid_argument, "inequality constraint callback missing");
    if (m > n) throw Error(Errc::invalid_argument, "more equality constraints than variables");
    auto check_pair = [](const Vec& lo, const Vec& hi, Index len, const char* what) {
      if (lo.size() != len || hi.size() != len)
        throw Error(Errc::invalid_argument, std::string(what) + " bound length mismatch");
      for (Index k = 0; k < len; ++k) {
        if (std::isnan(lo[k]) || std::isnan(hi[k]))
          throw Error(Errc::invalid_argument, std::string(what) + " bound is NaN");
        if (lo[k] > hi[k])
          throw Error(Errc::infeasible_bounds,
                      std::string(what) + " lower bound exceeds upper bound at index " +
                          std::to_string(k));
      }
    };
    check_pair(lower_x(), upper_x(), n, "variable");
    check_pair(lower_d(), upper_d(), p, "inequality");
  }
};

/// Evaluator over the stacked constraints (c, d) of a problem.
inline Evaluator make_evaluator(const ProblemSpec& spec) {
  auto g = [spec](const Vec& x) { return spec.constraints(x); };
  return Evaluator(spec.n, spec.f, g, spec.m + spec.p, spec.derivs);
}

/// Geometry of one h-row: line (no finite bound), parabola (one finite bound)
/// or circle (both bounds finite).
enum class BoundKind { line, lower_parabola, upper_parabola, circle };

inline BoundKind bound_kind(double lower, double upper) {
  const bool lo = std::isfinite(lower);
  const bool hi = std::isfinite(upper);
  if (lo && hi) return BoundKind::circle;
  if (lo) return BoundKind::lower_parabola;
  if (hi) return BoundKind::upper_parabola;
  return BoundKind::line;
}

/// Point of the augmented problem: original variables followed by slacks in
/// `x`, and the auxiliary coordinates of the h-constraints in `y`.
struct AugmentedPoint {
  Vec x;
  Vec y;

  Index size() const { return x.size(); }

  Vec stacked() const {
    Vec z(2 * x.size());
    z << x, y;
    return z;
  }

  static AugmentedPoint from_stacked(const Vec& z) {
    const Index half = z.size() / 2;
    return {z.head(half), z.tail(half)};
  }
};

/// Equality-constrained reformulation over (x, y) in R^{2n'}, n' = n + p:
///
///   min f(x_{1:n})  s.t.  c'(x) = (c(x_{1:n}), d(x_{1:n}) - x_{n+1:n'}) = 0,  h(x, y) = 0,
///
///   h_k = q_k (x_k - r_k)^2 + (1 - q_k^2) x_k + s_k (y_k - r_k)^2 - (1 - s_k^2) y_k - t_k.
struct TransformedProblem {
  ProblemSpec spec;
  Index n_prime = 0;
  Index m_prime = 0;
  Vec q, r, s, t;
  Vec l, u;
  std::vector<BoundKind> kind;
  bool is_equality_only = false;

  Index n() const { return spec.n; }
  Index m() const { return spec.m; }
  Index p() const { return spec.p; }

  double h_row(Index k, double xk, double yk) const {
    return q[k] * (xk - r[k]) * (xk - r[k]) + (1.0 - q[k] * q[k]) * xk +
           s[k] * (yk - r[k]) * (yk - r[k]) - (1.0 - s[k] * s[k]) * yk - t[k];
  }

  /// Diagonals of the h Jacobian with respect to x and y.
  Vec h_jac_x(const Vec& x) const {
    return (2.0 * q.array() * (x - r).array() + (1.0 - q.array().square())).matrix();
  }
  Vec h_jac_y(const Vec& y) const {
    return (2.0 * s.array() * (y - r).array() - (1.0 - s.array().square())).matrix();
  }

  /// c' given the stacked constraint values g = (c, d) at x_{1:n}.
  Vec c_prime_from(const Vec& g, const Vec& x_aug) const {
    Vec cp = g;
    if (p() > 0) cp.tail(p()) -= x_aug.tail(p());
    return cp;
  }

  /// Jacobian of c' with respect to the n' augmented x variables.
  Mat c_prime_jacobian_from(const Mat& jac_g) const {
    Mat jp = Mat::Zero(m_prime, n_prime);
    if (m_prime == 0) return jp;
    jp.leftCols(n()) = jac_g;
    if (p() > 0) jp.bottomRightCorner(p(), p()) = -Mat::Identity(p(), p());
    return jp;
  }
};

inline Vec eval_h(const TransformedProblem& tp, const AugmentedPoint& z) {
  Vec h(tp.n_prime);
  for (Index k = 0; k < tp.n_prime; ++k) h[k] = tp.h_row(k, z.x[k], z.y[k]);
  return h;
}

/// Builds the augmented problem and its coefficient vectors. Rejects
/// inconsistent bounds and boxes narrower than `min_box_width`.
inline TransformedProblem transform(const ProblemSpec& spec, double min_box_width = 1e-8) {
  spec.validate();
  TransformedProblem tp;
  tp.spec = spec;
  tp.n_prime = spec.n + spec.p;
  tp.m_prime = spec.m + spec.p;
  tp.l.resize(tp.n_prime);
  tp.u.resize(tp.n_prime);
  tp.l << spec.lower_x(), spec.lower_d();
  tp.u << spec.upper_x(), spec.upper_d();

  tp.q = Vec::Zero(tp.n_prime);
  tp.r = Vec::Zero(tp.n_prime);
  tp.s = Vec::Zero(tp.n_prime);
  tp.t = Vec::Zero(tp.n_prime);
  tp.kind.resize(static_cast<std::size_t>(tp.n_prime));

  bool any_bound = false;
  for (Index k = 0; k < tp.n_prime; ++k) {
    const double lo = tp.l[k];
    const double hi = tp.u[k];
    const BoundKind bk = bound_kind(lo, hi);
    tp.kind[static_cast<std::size_t>(k)] = bk;
    switch (bk) {
      case BoundKind::line:
        break;
      case BoundKind::lower_parabola:
        tp.r[k] = lo; tp.s[k] = -1.0; tp.t[k] = lo;
        break;
      case BoundKind::upper_parabola:
        tp.r[k] = hi; tp.s[k] = 1.0; tp.t[k] = hi;
        break;
      case BoundKind::circle:
        if (hi - lo <= min_box_width)
          throw Error(Errc::degenerate_box,
                      "box at index " + std::to_string(k) + " is narrower than " +
                          std::to_string(min_box_width));
        tp.q[k] = 1.0;
        tp.r[k] = 0.5 * (hi + lo);
        tp.s[k] = 1.0;
        tp.t[k] = 0.25 * (hi - lo) * (hi - lo);
        break;
    }
    if (bk != BoundKind::line) any_bound = true;
  }
  tp.is_equality_only = spec.p == 0 && !any_bound;
  return tp;
}

/// Solves h_k(x_k, y_k) = 0 for y_k on the branch y_k >= r_k. x_k must lie
/// inside its bounds.
inline double solve_y_for_x(const TransformedProblem& tp, Index k, double xk) {
  const double rk = tp.r[k];
  switch (tp.kind[static_cast<std::size_t>(k)]) {
    case BoundKind::line:
      return xk;
    case BoundKind::lower_parabola:
    case BoundKind::upper_parabola:
      // q = 0: s (y - r)^2 = t - x
      return rk + std::sqrt(std::max(0.0, (tp.t[k] - xk) / tp.s[k]));
    case BoundKind::circle:
      return rk + std::sqrt(std::max(0.0, tp.t[k] - (xk - rk) * (xk - rk)));
  }
  return xk;
}

inline double boundary_margin(double lower, double upper) {
  const bool lo = std::isfinite(lower);
  const bool hi = std::isfinite(upper);
  double scale = 1.0;
  if (lo && hi) scale = std::max(1.0, upper - lower);
  else if (lo) scale = std::max(1.0, std::abs(lower));
  else if (hi) scale = std::max(1.0, std::abs(upper));
  return 1e-9 * scale;
}

/// Lifts an original-space start to the augmented space: slacks are set to
/// d(x0), coordinates within eps_c of a bound are pulled strictly inside and
/// each y_k is placed on the upper branch of its h-row.
///
/// The result satisfies ||h||_inf <= 1e-12; c' feasibility is left to the
/// caller.
inline AugmentedPoint init_augmented(const TransformedProblem& tp, const Vec& x0,
                                     double eps_c) {
  if (x0.size() != tp.n())
    throw Error(Errc::invalid_argument, "starting point has length " +
                                            std::to_string(x0.size()) + ", expected " +
                                            std::to_string(tp.n()));
  if (!x0.allFinite()) throw Error(Errc::infeasible_start, "starting point is not finite");

  AugmentedPoint z;
  z.x.resize(tp.n_prime);
  z.x.head(tp.n()) = x0;
  if (tp.p() > 0) {
    Vec dv = tp.spec.d(x0);
    if (dv.size() != tp.p() || !dv.allFinite())
      throw Error(Errc::infeasible_start, "inequality constraints not finite at start");
    z.x.tail(tp.p()) = dv;
  }

  for (Index k = 0; k < tp.n_prime; ++k) {
    const double lo = tp.l[k];
    const double hi = tp.u[k];
    double& xk = z.x[k];
    if (xk < lo - eps_c || xk > hi + eps_c)
      throw Error(Errc::infeasible_start,
                  (k < tp.n() ? "variable " : "inequality ") +
                      std::to_string(k < tp.n() ? k : k - tp.n()) + " violates its bounds");
    const double delta = boundary_margin(lo, hi);
    if (std::isfinite(lo) && std::isfinite(hi)) {
      const double half = 0.5 * (hi - lo);
      const double margin = std::min(delta, 0.5 * half);
      xk = std::clamp(xk, lo + margin, hi - margin);
    } else if (std::isfinite(lo)) {
      xk = std::max(xk, lo + delta);
    } else if (std::isfinite(hi)) {
      xk = std::min(xk, hi - delta);
    }
  }

  z.y.resize(tp.n_prime);
  for (Index k = 0; k < tp.n_prime; ++k) z.y[k] = solve_y_for_x(tp, k, z.x[k]);
  return z;
}

}  // namespace lfpsqp

#endif  // LFPSQP_PROBLEM_HPP
