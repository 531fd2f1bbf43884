#pragma once
#ifndef LFPSQP_RETRACT_HPP
#define LFPSQP_RETRACT_HPP

#include "lfpsqp/factor.hpp"
#include "lfpsqp/problem.hpp"
#include "lfpsqp/types.hpp"

#include <algorithm>
#include <cmath>

namespace lfpsqp {

enum class RetractionVariant { projection, quasi_newton };

struct RetractionConfig {
  double eps_c = 1e-6;   ///< feasibility tolerance on ||c||_inf
  Index k_max = 100;     ///< inner iteration cap
  double mu0 = 0.01;     ///< initial penalty of the projection retraction
  RetractionVariant variant = RetractionVariant::projection;
  double h_tol = 1e-12;  ///< tolerance on ||h||_inf in the augmented space
};

struct RetractionResult {
  Vec point;
  Index inner_iters = 0;
  Index cg_iters = 0;
  double constraint_norm = 0.0;
};

struct MixedRetractionResult {
  AugmentedPoint point;
  Index inner_iters = 0;
  Index cg_iters = 0;
  double constraint_norm = 0.0;
  double h_norm = 0.0;
};

namespace detail {

inline void validate(const RetractionConfig& cfg) {
  if (!(cfg.eps_c > 0.0) || cfg.k_max < 1 || !(cfg.mu0 > 0.0))
    throw Error(Errc::invalid_argument, "retraction config needs eps_c > 0, k_max >= 1, mu0 > 0");
}

/// Broyden "good" inverse update B += (dw - B dc) (B^T dw)^T / (dw^T B dc).
inline void broyden_update(Mat& inv_jac, const Vec& dw, const Vec& dc) {
  const Vec u = dw - inv_jac * dc;
  const Vec v = inv_jac.transpose() * dw;
  const double denom = v.dot(dc);
  if (!(std::abs(denom) > 1e-14 * v.norm() * dc.norm()))
    throw Error(Errc::retraction_diverged, "Broyden update denominator vanished");
  inv_jac.noalias() += (u / denom) * v.transpose();
}

/// Plain CG on a symmetric positive definite operator, started at zero.
template <class Op>
Vec conjugate_gradient(Op&& apply, const Vec& rhs, double tol, Index max_iter, Index& iters) {
  Vec x = Vec::Zero(rhs.size());
  Vec r = rhs;
  Vec p = r;
  double rr = r.squaredNorm();
  iters = 0;
  while (std::sqrt(rr) > tol && iters < max_iter) {
    Vec ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    ++iters;
  }
  return x;
}

inline double inner_cg_tolerance(double eps_c, const Vec& rhs) {
  return std::min(eps_c, 1e-3 * rhs.norm());
}

}  // namespace detail

/// Orthographic retraction x + dx + U w with c(x + dx + U w) = 0, solved for w
/// by Broyden's method started from the inverse Jacobian Sigma^{-1} V^T.
/// Requires a full-rank factorization.
template <class ConstraintFn>
RetractionResult qn_retract_equality(const Vec& x, const Vec& dx, ConstraintFn&& c_eval,
                                     const EqualityFactorization& fact, const RetractionConfig& cfg) {
  detail::validate(cfg);
  if (!fact.full_rank())
    throw Error(Errc::invalid_argument, "quasi-Newton retraction needs a full-rank Jacobian");
  RetractionResult out;
  out.point = x + dx;
  Vec c = c_eval(out.point);
  if (!c.allFinite()) throw Error(Errc::retraction_diverged, "constraints not finite");
  if (c.size() == 0) return out;

  Mat inv_jac = fact.sigma.cwiseInverse().asDiagonal() * fact.V.transpose();
  Index k = 0;
  while (inf_norm(c) > cfg.eps_c) {
    if (k >= cfg.k_max) throw Error(Errc::retraction_diverged, "quasi-Newton retraction hit k_max");
    const Vec dw = -inv_jac * c;
    out.point.noalias() += fact.U * dw;
    Vec c_next = c_eval(out.point);
    ++k;
    if (!c_next.allFinite()) throw Error(Errc::retraction_diverged, "constraints not finite");
    const Vec dc = c_next - c;
    c = std::move(c_next);
    if (inf_norm(c) <= cfg.eps_c) break;
    detail::broyden_update(inv_jac, dw, dc);
  }
  out.inner_iters = k;
  out.constraint_norm = inf_norm(c);
  return out;
}

/// Projection retraction: quadratic-penalty Gauss-Newton iteration
///   (J^T J + mu I) p = -(J^T c + mu (x_hat - x_tilde)),  mu <- ||c||_2,
/// each step accepted by an Armijo test on
///   phi_mu(x) = mu/2 ||x - x_tilde||^2 + 1/2 ||c(x)||^2.
/// Works with rank-deficient Jacobians.
template <class ConstraintFn, class JacobianFn>
RetractionResult projection_retract(const Vec& x, const Vec& dx, ConstraintFn&& c_eval,
                                    JacobianFn&& jac_eval, const RetractionConfig& cfg) {
  detail::validate(cfg);
  RetractionResult out;
  const Vec target = x + dx;
  out.point = target;
  Vec c = c_eval(out.point);
  if (!c.allFinite()) throw Error(Errc::retraction_diverged, "constraints not finite");
  if (c.size() == 0) return out;

  const Index n = x.size();
  double mu = cfg.mu0;
  Index k = 0;
  while (inf_norm(c) > cfg.eps_c) {
    if (k >= cfg.k_max) throw Error(Errc::retraction_diverged, "projection retraction hit k_max");
    const Mat jac = jac_eval(out.point);
    const Vec offset = out.point - target;
    const Vec rhs = -(jac.transpose() * c + mu * offset);
    auto normal_op = [&](const Vec& v) -> Vec {
      Vec jv = jac * v;
      return jac.transpose() * jv + mu * v;
    };
    Index cg_iters = 0;
    const Vec step = detail::conjugate_gradient(normal_op, rhs, detail::inner_cg_tolerance(cfg.eps_c, rhs),
                                                n + 10, cg_iters);
    out.cg_iters += cg_iters;

    const double phi0 = 0.5 * mu * offset.squaredNorm() + 0.5 * c.squaredNorm();
    const double slope = -rhs.dot(step);
    double alpha = 1.0;
    bool accepted = false;
    Vec trial, c_trial;
    for (int backtrack = 0; backtrack < 40; ++backtrack, alpha *= 0.5) {
      trial = out.point + alpha * step;
      c_trial = c_eval(trial);
      if (!c_trial.allFinite()) continue;
      const double phi = 0.5 * mu * (trial - target).squaredNorm() + 0.5 * c_trial.squaredNorm();
      if (phi <= phi0 + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) throw Error(Errc::retraction_diverged, "no decrease of the penalty objective");
    out.point = std::move(trial);
    c = std::move(c_trial);
    mu = std::max(c.norm(), 1e-12);
    ++k;
  }
  out.inner_iters = k;
  out.constraint_norm = inf_norm(c);
  return out;
}

namespace detail {

/// Root of a*g^2 + b*g + c = 0 of smallest magnitude; false if none is real.
inline bool smallest_quadratic_root(double a, double b, double c, double& root) {
  if (a == 0.0) {
    if (b == 0.0) {
      root = 0.0;
      return c == 0.0;
    }
    root = -c / b;
    return std::isfinite(root);
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  const double qq = -0.5 * (b + std::copysign(sq, b));
  if (qq == 0.0) {
    root = 0.0;
    return true;
  }
  const double r1 = qq / a;
  const double r2 = c / qq;
  root = std::abs(r1) < std::abs(r2) ? r1 : r2;
  return std::isfinite(root);
}

}  // namespace detail

/// Coordinate-wise retraction onto {h = 0}. Lines pass the step through,
/// circles project radially about (r_k, r_k), and parabolas move the
/// proposal along the line towards the point one unit inward along the
/// normal at z, landing on the parabola at the root closest to the proposal.
inline AugmentedPoint h_retract(const TransformedProblem& tp, const AugmentedPoint& z, const Vec& dz) {
  const Index np = tp.n_prime;
  AugmentedPoint out{z.x + dz.head(np), z.y + dz.tail(np)};
  for (Index k = 0; k < np; ++k) {
    const double rk = tp.r[k];
    switch (tp.kind[static_cast<std::size_t>(k)]) {
      case BoundKind::line:
        break;
      case BoundKind::circle: {
        const double ax = out.x[k] - rk;
        const double ay = out.y[k] - rk;
        const double len = std::hypot(ax, ay);
        if (!(len > 0.0) || !std::isfinite(len))
          throw Error(Errc::coordinate_retract_failed, "proposal at the circle centre");
        const double radius = std::sqrt(tp.t[k]);
        out.x[k] = rk + radius * ax / len;
        out.y[k] = rk + radius * ay / len;
        break;
      }
      case BoundKind::lower_parabola:
      case BoundKind::upper_parabola: {
        const double sk = tp.s[k];
        double nx = -sk;
        double ny = -2.0 * (z.y[k] - rk);
        const double nlen = std::hypot(nx, ny);
        nx /= nlen;
        ny /= nlen;
        const double xi_x = nx - dz[k];
        const double xi_y = ny - dz[np + k];
        const double ax = out.x[k];
        const double ay = out.y[k];
        // h(a + g xi) with q = 0: x + s (y - r)^2 - t
        const double qa = sk * xi_y * xi_y;
        const double qb = xi_x + 2.0 * sk * xi_y * (ay - rk);
        const double qc = ax + sk * (ay - rk) * (ay - rk) - tp.t[k];
        double gamma = 0.0;
        if (!detail::smallest_quadratic_root(qa, qb, qc, gamma))
          throw Error(Errc::coordinate_retract_failed, "parabola retraction has no real root");
        out.y[k] = ay + gamma * xi_y;
        out.x[k] = tp.t[k] - sk * (out.y[k] - rk) * (out.y[k] - rk);
        break;
      }
    }
  }
  return out;
}

/// Composite retraction z -> R^h(dz + U w) with w chosen by Broyden's method
/// so that c'(x) = 0. `c_prime_eval` maps the augmented x (length n') to c'.
/// Requires a full-rank mixed factorization.
template <class CPrimeFn>
MixedRetractionResult qn_retract_mixed(const TransformedProblem& tp, const AugmentedPoint& z, const Vec& dz,
                                       CPrimeFn&& c_prime_eval, const MixedFactorization& fact,
                                       const RetractionConfig& cfg) {
  detail::validate(cfg);
  if (!fact.full_rank())
    throw Error(Errc::invalid_argument, "quasi-Newton retraction needs a full-rank Jacobian");
  MixedRetractionResult out;
  out.point = h_retract(tp, z, dz);
  Vec c = c_prime_eval(out.point.x);
  if (!c.allFinite()) throw Error(Errc::retraction_diverged, "constraints not finite");

  if (c.size() > 0) {
    Mat inv_jac = fact.sigma.cwiseInverse().asDiagonal() * fact.V.transpose();
    Vec w = Vec::Zero(fact.m_prime());
    Index k = 0;
    while (inf_norm(c) > cfg.eps_c) {
      if (k >= cfg.k_max) throw Error(Errc::retraction_diverged, "quasi-Newton retraction hit k_max");
      const Vec dw = -inv_jac * c;
      w += dw;
      out.point = h_retract(tp, z, dz + fact.apply_u(w));
      Vec c_next = c_prime_eval(out.point.x);
      ++k;
      if (!c_next.allFinite()) throw Error(Errc::retraction_diverged, "constraints not finite");
      const Vec dc = c_next - c;
      c = std::move(c_next);
      if (inf_norm(c) <= cfg.eps_c) break;
      detail::broyden_update(inv_jac, dw, dc);
    }
    out.inner_iters = k;
  }
  out.constraint_norm = inf_norm(c);
  out.h_norm = inf_norm(eval_h(tp, out.point));
  return out;
}

namespace detail {

/// Re-solves y_k for fixed x_k on the current branch wherever x_k lies inside
/// its bounds. c' only depends on x, so this reduces ||h|| without touching c'.
inline void polish_y(const TransformedProblem& tp, AugmentedPoint& z) {
  for (Index k = 0; k < tp.n_prime; ++k) {
    const double rk = tp.r[k];
    const double xk = z.x[k];
    double radicand = 0.0;
    switch (tp.kind[static_cast<std::size_t>(k)]) {
      case BoundKind::line:
        z.y[k] = xk;
        continue;
      case BoundKind::lower_parabola:
      case BoundKind::upper_parabola:
        radicand = (tp.t[k] - xk) / tp.s[k];
        break;
      case BoundKind::circle:
        radicand = tp.t[k] - (xk - rk) * (xk - rk);
        break;
    }
    if (radicand < 0.0) continue;
    const double branch = z.y[k] >= rk ? 1.0 : -1.0;
    z.y[k] = rk + branch * std::sqrt(radicand);
  }
}

}  // namespace detail

/// Projection retraction in the augmented space: Gauss-Newton on the
/// stacked residual (c'(x), h(x, y)) with the same penalty schedule as
/// projection_retract. Converges when ||c'||_inf <= eps_c and
/// ||h||_inf <= h_tol. `c_prime_jac` maps augmented x to the m' x n'
/// Jacobian of c'.
template <class CPrimeFn, class CPrimeJacFn>
MixedRetractionResult projection_retract_mixed(const TransformedProblem& tp, const AugmentedPoint& z,
                                               const Vec& dz, CPrimeFn&& c_prime_eval,
                                               CPrimeJacFn&& c_prime_jac, const RetractionConfig& cfg) {
  detail::validate(cfg);
  const Index np = tp.n_prime;
  const Index mp = tp.m_prime;
  const Vec target = z.stacked() + dz;

  MixedRetractionResult out;
  out.point = AugmentedPoint::from_stacked(target);
  Vec c = c_prime_eval(out.point.x);
  Vec h = eval_h(tp, out.point);
  if (!c.allFinite() || !h.allFinite()) throw Error(Errc::retraction_diverged, "constraints not finite");

  auto converged = [&]() { return inf_norm(c) <= cfg.eps_c && inf_norm(h) <= cfg.h_tol; };
  double mu = cfg.mu0;
  Index k = 0;
  while (!converged()) {
    if (k >= cfg.k_max) throw Error(Errc::retraction_diverged, "projection retraction hit k_max");
    const Mat jac = mp > 0 ? c_prime_jac(out.point.x) : Mat(0, np);
    const Vec kx = tp.h_jac_x(out.point.x);
    const Vec ky = tp.h_jac_y(out.point.y);

    // J v and J^T w for the stacked Jacobian [[J, 0], [diag(kx), diag(ky)]].
    auto apply_j = [&](const Vec& v, Vec& jc, Vec& jh) {
      jc = mp > 0 ? Vec(jac * v.head(np)) : Vec(0);
      jh = (kx.array() * v.head(np).array() + ky.array() * v.tail(np).array()).matrix();
    };
    auto apply_jt = [&](const Vec& wc, const Vec& wh) {
      Vec out_v(2 * np);
      out_v.head(np) = (kx.array() * wh.array()).matrix();
      if (mp > 0) out_v.head(np).noalias() += jac.transpose() * wc;
      out_v.tail(np) = (ky.array() * wh.array()).matrix();
      return out_v;
    };

    const Vec zs = out.point.stacked();
    const Vec offset = zs - target;
    const Vec rhs = -(apply_jt(c, h) + mu * offset);
    auto normal_op = [&](const Vec& v) -> Vec {
      Vec jc, jh;
      apply_j(v, jc, jh);
      return apply_jt(jc, jh) + mu * v;
    };
    Index cg_iters = 0;
    const Vec step = detail::conjugate_gradient(normal_op, rhs, detail::inner_cg_tolerance(cfg.eps_c, rhs),
                                                2 * np + 10, cg_iters);
    out.cg_iters += cg_iters;

    const double phi0 = 0.5 * mu * offset.squaredNorm() + 0.5 * c.squaredNorm() + 0.5 * h.squaredNorm();
    const double slope = -rhs.dot(step);
    double alpha = 1.0;
    bool accepted = false;
    AugmentedPoint trial;
    Vec c_trial, h_trial;
    for (int backtrack = 0; backtrack < 40; ++backtrack, alpha *= 0.5) {
      trial = AugmentedPoint::from_stacked(zs + alpha * step);
      c_trial = c_prime_eval(trial.x);
      h_trial = eval_h(tp, trial);
      if (!c_trial.allFinite() || !h_trial.allFinite()) continue;
      const double phi = 0.5 * mu * (trial.stacked() - target).squaredNorm() + 0.5 * c_trial.squaredNorm() +
                         0.5 * h_trial.squaredNorm();
      if (phi <= phi0 + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) throw Error(Errc::retraction_diverged, "no decrease of the penalty objective");
    out.point = std::move(trial);
    c = std::move(c_trial);
    h = std::move(h_trial);
    mu = std::max(std::sqrt(c.squaredNorm() + h.squaredNorm()), 1e-12);
    ++k;
  }
  // Snap y onto h = 0 exactly. Only y moves, so c' is untouched.
  if (k > 0) {
    detail::polish_y(tp, out.point);
    h = eval_h(tp, out.point);
  }
  out.inner_iters = k;
  out.constraint_norm = inf_norm(c);
  out.h_norm = inf_norm(h);
  return out;
}

}  // namespace lfpsqp

#endif  // LFPSQP_RETRACT_HPP
