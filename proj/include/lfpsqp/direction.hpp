#pragma once
#ifndef LFPSQP_DIRECTION_HPP
#define LFPSQP_DIRECTION_HPP

#include "lfpsqp/deriv.hpp"
#include "lfpsqp/factor.hpp"
#include "lfpsqp/types.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

namespace lfpsqp {

enum class DirectionKind { gradient, newton, negative_curvature };

inline std::string_view to_string(DirectionKind kind) {
  switch (kind) {
    case DirectionKind::gradient: return "gradient";
    case DirectionKind::newton: return "newton";
    case DirectionKind::negative_curvature: return "negative_curvature";
  }
  return "unknown";
}

/// A tangent step proposal.
struct Direction {
  Vec step;
  DirectionKind kind = DirectionKind::gradient;
  double residual = 0.0;
  Index cg_iters = 0;
  /// Set when projected CG stopped on its iteration cap.
  bool hit_iteration_cap = false;
};

/// Projector I - U U^T for an explicit column-orthonormal basis.
struct BasisProjector {
  const Mat& basis;
  Vec project(const Vec& v) const {
    if (basis.cols() == 0) return v;
    Vec coeff = basis.transpose() * v;
    return v - basis * coeff;
  }
};

/// Inexact-Newton forcing term
///   delta = kappa * min(1, g_now / g_prev) * g_now,
/// with g_prev = +inf on the first iteration.
inline double dembo_tolerance(double kappa, double g_norm_now, double g_norm_prev) {
  double ratio = 1.0;
  if (std::isfinite(g_norm_prev) && g_norm_prev > 0.0) ratio = std::min(1.0, g_norm_now / g_norm_prev);
  return kappa * ratio * g_norm_now;
}

/// Projected conjugate gradient for the saddle system
///
///   A dx + U dlambda = b,   U^T dx = 0
///
/// where `projector.project` applies I - U U^T. Stops when ||r|| <= delta,
/// returns a normalised direction of nonpositive curvature when one is met,
/// and throws IndefiniteProjection when r . g <= 0. `max_iter` caps the
/// iteration count.
template <class Action, class Projector>
Direction projected_cg(Action&& apply_a, const Projector& projector, const Vec& b, double delta,
                       Index max_iter) {
  Direction out;
  out.kind = DirectionKind::newton;
  Vec dx = Vec::Zero(b.size());
  Vec r = -projector.project(b);
  Vec g = r;
  Vec p = -g;

  Index iter = 0;
  double rnorm = r.norm();
  while (rnorm > delta) {
    if (iter >= max_iter) {
      out.hit_iteration_cap = true;
      break;
    }
    Vec q = apply_a(p);
    ++iter;
    const double pq = p.dot(q);
    if (pq <= 0.0) {
      // Oriented along b, i.e. downhill when b is the negative gradient.
      out.step = p / p.norm();
      if (out.step.dot(b) < 0.0) out.step = -out.step;
      out.kind = DirectionKind::negative_curvature;
      out.residual = rnorm;
      out.cg_iters = iter;
      return out;
    }
    const double rg = r.dot(g);
    if (rg <= 0.0) throw Error(Errc::indefinite_projection, "projected CG lost positivity of r.g");
    const double alpha = rg / pq;
    dx.noalias() += alpha * p;
    Vec r_next = r + alpha * q;
    Vec g_next = projector.project(r_next);
    const double beta = r_next.dot(g_next) / rg;
    p = -g_next + beta * p;
    // Replacing r by its projection keeps roundoff from leaking into the
    // normal space.
    g = g_next;
    r = g_next;
    rnorm = r.norm();
  }
  out.step = std::move(dx);
  out.residual = rnorm;
  out.cg_iters = iter;
  return out;
}

/// projected_cg against an explicit column-orthonormal basis.
template <class Action>
Direction projected_cg(Action&& apply_a, const Mat& basis, const Vec& b, double delta, Index max_iter) {
  return projected_cg(std::forward<Action>(apply_a), BasisProjector{basis}, b, delta, max_iter);
}

/// -P[grad f] in the equality case.
inline Direction gradient_direction(const EqualityFactorization& fact, const Vec& grad_f) {
  Direction out;
  out.step = -fact.project(grad_f);
  out.kind = DirectionKind::gradient;
  return out;
}

/// -P[(grad_x f', 0)] in the augmented case.
inline Direction gradient_direction(const MixedFactorization& fact, const Vec& grad_x) {
  Direction out;
  out.step = -fact.project_gradient(grad_x);
  out.kind = DirectionKind::gradient;
  return out;
}

/// Smallest CG tolerance used, to avoid iterating below roundoff.
inline double cg_tolerance_floor(const Vec& b) { return 1e-14 * (1.0 + b.norm()); }

/// Inexact Newton step on the equality manifold: projected CG on
/// W(x, lambda) with basis U_r and right-hand side -P[grad f]. `lambda` must
/// come from fact.multipliers(grad_f).
inline Direction newton_direction(Evaluator& eval, const Vec& x, const Vec& lambda,
                                  const EqualityFactorization& fact, const Vec& grad_f, double delta,
                                  Index max_iter = -1) {
  const Vec b = -fact.project(grad_f);
  const Index tangent_dim = fact.ambient_dim() - fact.rank;
  if (max_iter < 0) max_iter = std::max<Index>(1, 10 * tangent_dim);
  auto apply_w = [&](const Vec& v) { return eval.w_action(x, lambda, v); };
  return projected_cg(apply_w, fact, b, std::max(delta, cg_tolerance_floor(b)), max_iter);
}

/// Inexact Newton step on the augmented manifold. The operator is
///   x-block: W'(x, lambda_c') v_x + 2 diag(lambda_h . q) v_x
///   y-block: 2 diag(lambda_h . s) v_y
/// where W' acts on the original n variables only (c' is linear in the
/// slacks).
inline Direction newton_direction(Evaluator& eval, const TransformedProblem& tp, const AugmentedPoint& z,
                                  const MixedFactorization::Multipliers& lambda,
                                  const MixedFactorization& fact, const Vec& grad_x, double delta,
                                  Index max_iter = -1) {
  const Index np = tp.n_prime;
  const Index n = tp.n();
  const Vec b = -fact.project_gradient(grad_x);
  const Vec hx = 2.0 * (lambda.h.array() * tp.q.array()).matrix();
  const Vec hy = 2.0 * (lambda.h.array() * tp.s.array()).matrix();
  const Vec x_orig = z.x.head(n);
  const Index tangent_dim = np - fact.rank;
  if (max_iter < 0) max_iter = std::max<Index>(1, 10 * tangent_dim);

  auto apply_block = [&](const Vec& v) {
    Vec out(2 * np);
    out.head(np) = (hx.array() * v.head(np).array()).matrix();
    out.head(n) += eval.w_action(x_orig, lambda.c_prime, v.head(n));
    out.tail(np) = (hy.array() * v.tail(np).array()).matrix();
    return out;
  };
  return projected_cg(apply_block, fact, b, std::max(delta, cg_tolerance_floor(b)), max_iter);
}

}  // namespace lfpsqp

#endif  // LFPSQP_DIRECTION_HPP
