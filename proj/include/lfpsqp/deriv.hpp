#pragma once
#ifndef LFPSQP_DERIV_HPP
#define LFPSQP_DERIV_HPP

#include "lfpsqp/dual.hpp"
#include "lfpsqp/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

namespace lfpsqp {

enum class FallbackMode { forward_dual, central_difference };

/// Derivative callbacks for an objective f and a stacked constraint map g.
/// Any callback may be left empty; the evaluator then differences f and g.
struct DerivativeOracle {
  std::function<Vec(const Vec&)> grad_f;
  /// Jacobian of g, (number of constraints) x n.
  std::function<Mat(const Vec&)> jac;
  /// (x, lambda, v) -> W(x, lambda) v with W the Hessian of f + lambda . g.
  std::function<Vec(const Vec&, const Vec&, const Vec&)> hess_lag_action;
  FallbackMode fallback_mode = FallbackMode::central_difference;
  /// Relative step of the central-difference fallback.
  double fd_step = std::cbrt(std::numeric_limits<double>::epsilon());
};

struct EvalCounts {
  long f = 0;
  long constraints = 0;
  long grad = 0;
  long jac = 0;
  long w_action = 0;
};

/// Forward-mode oracle built from generic callables. `f` must accept an
/// Eigen column vector of any scalar type S and return S; `g` likewise returns
/// an Eigen column vector of S (possibly empty).
template <class F, class G>
DerivativeOracle dual_oracle(F f, G g) {
  DerivativeOracle oracle;
  oracle.fallback_mode = FallbackMode::forward_dual;

  oracle.grad_f = [f](const Vec& x) {
    using D = Dual<double>;
    const Index n = x.size();
    DualVec<double> xd = x.cast<D>();
    Vec grad(n);
    for (Index i = 0; i < n; ++i) {
      xd[i].d = 1.0;
      grad[i] = f(xd).d;
      xd[i].d = 0.0;
    }
    return grad;
  };

  oracle.jac = [g](const Vec& x) {
    using D = Dual<double>;
    const Index n = x.size();
    DualVec<double> xd = x.cast<D>();
    Mat jac;
    for (Index i = 0; i < n; ++i) {
      xd[i].d = 1.0;
      DualVec<double> gd = g(xd);
      if (i == 0) jac.resize(gd.size(), n);
      for (Index k = 0; k < gd.size(); ++k) jac(k, i) = gd[k].d;
      xd[i].d = 0.0;
    }
    if (n == 0) jac.resize(0, 0);
    return jac;
  };

  oracle.hess_lag_action = [f, g](const Vec& x, const Vec& lambda, const Vec& v) {
    using D = Dual<double>;
    using DD = Dual<D>;
    const Index n = x.size();
    DualVec<D> xd(n);
    for (Index j = 0; j < n; ++j) xd[j] = DD(D(x[j], v[j]), D(0.0, 0.0));
    Vec wv(n);
    for (Index i = 0; i < n; ++i) {
      xd[i].d = D(1.0, 0.0);
      DD lag = f(xd);
      if (lambda.size() > 0) {
        DualVec<D> gd = g(xd);
        for (Index k = 0; k < gd.size(); ++k) lag += DD(D(lambda[k])) * gd[k];
      }
      wv[i] = lag.d.d;
      xd[i].d = D(0.0, 0.0);
    }
    return wv;
  };
  return oracle;
}

/// Evaluates f, g and their derivatives for one solve, falling back to
/// central differences where the oracle has no callback, and keeps per-solve
/// evaluation counters.
class Evaluator {
 public:
  Evaluator(Index n, std::function<double(const Vec&)> f, std::function<Vec(const Vec&)> g,
            Index n_constraints, DerivativeOracle oracle)
      : n_(n),
        n_constraints_(n_constraints),
        f_(std::move(f)),
        g_(std::move(g)),
        oracle_(std::move(oracle)) {}

  Index dim() const { return n_; }
  Index num_constraints() const { return n_constraints_; }
  const EvalCounts& counts() const { return counts_; }
  const DerivativeOracle& oracle() const { return oracle_; }

  double objective(const Vec& x) {
    ++counts_.f;
    return f_(x);
  }

  Vec constraints(const Vec& x) {
    if (n_constraints_ == 0) return Vec(0);
    ++counts_.constraints;
    Vec g = g_(x);
    if (g.size() != n_constraints_)
      throw Error(Errc::invalid_argument, "constraint callback returned wrong length");
    return g;
  }

  Vec gradient(const Vec& x) {
    ++counts_.grad;
    Vec grad = oracle_.grad_f ? oracle_.grad_f(x) : fd_gradient(x);
    if (grad.size() != n_) throw Error(Errc::invalid_argument, "gradient has wrong length");
    if (!grad.allFinite()) throw Error(Errc::non_finite_derivative, "objective gradient");
    return grad;
  }

  Mat jacobian(const Vec& x) {
    if (n_constraints_ == 0) return Mat(0, n_);
    ++counts_.jac;
    Mat jac = oracle_.jac ? oracle_.jac(x) : fd_jacobian(x);
    if (jac.rows() != n_constraints_ || jac.cols() != n_)
      throw Error(Errc::invalid_argument, "Jacobian has wrong shape");
    if (!jac.allFinite()) throw Error(Errc::non_finite_derivative, "constraint Jacobian");
    return jac;
  }

  /// W(x, lambda) v for W the Hessian of f + lambda . g.
  Vec w_action(const Vec& x, const Vec& lambda, const Vec& v) {
    if (lambda.size() != n_constraints_)
      throw Error(Errc::invalid_argument, "multiplier vector has wrong length");
    ++counts_.w_action;
    if (v.size() == 0 || v.isZero(0.0)) return Vec::Zero(n_);
    Vec wv;
    if (oracle_.hess_lag_action) {
      wv = oracle_.hess_lag_action(x, lambda, v);
    } else if (has_accurate_lagrangian_gradient(lambda)) {
      wv = fd_w_action_from_gradient(x, lambda, v);
    } else {
      wv = fd_w_action_from_values(x, lambda, v);
    }
    if (wv.size() != n_) throw Error(Errc::invalid_argument, "Hessian action has wrong length");
    if (!wv.allFinite()) throw Error(Errc::non_finite_derivative, "Hessian-of-Lagrangian action");
    return wv;
  }

  double fd_step_for(const Vec& x) const {
    return oracle_.fd_step * (1.0 + (x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0));
  }

 private:
  Vec fd_gradient(const Vec& x) const {
    const double h = fd_step_for(x);
    Vec grad(n_);
    Vec xp = x;
    for (Index i = 0; i < n_; ++i) {
      const double xi = x[i];
      xp[i] = xi + h;
      const double fp = f_(xp);
      xp[i] = xi - h;
      const double fm = f_(xp);
      xp[i] = xi;
      grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
  }

  Mat fd_jacobian(const Vec& x) const {
    const double h = fd_step_for(x);
    Mat jac(n_constraints_, n_);
    Vec xp = x;
    for (Index i = 0; i < n_; ++i) {
      const double xi = x[i];
      xp[i] = xi + h;
      Vec gp = g_(xp);
      xp[i] = xi - h;
      Vec gm = g_(xp);
      xp[i] = xi;
      jac.col(i) = (gp - gm) / (2.0 * h);
    }
    return jac;
  }

  bool has_accurate_lagrangian_gradient(const Vec& lambda) const {
    const bool needs_jac = lambda.size() > 0 && !lambda.isZero(0.0);
    return static_cast<bool>(oracle_.grad_f) && (!needs_jac || static_cast<bool>(oracle_.jac));
  }

  Vec lagrangian_gradient(const Vec& x, const Vec& lambda) const {
    Vec grad = oracle_.grad_f(x);
    if (lambda.size() > 0 && !lambda.isZero(0.0)) grad.noalias() += oracle_.jac(x).transpose() * lambda;
    return grad;
  }

  // Directional central difference of x -> grad f(x) + J(x)^T lambda along
  // the unit direction v / ||v||, rescaled by ||v||.
  Vec fd_w_action_from_gradient(const Vec& x, const Vec& lambda, const Vec& v) const {
    const double vnorm = v.norm();
    const double a = oracle_.fd_step * (1.0 + x.norm());
    const Vec dir = v / vnorm;
    Vec gp = lagrangian_gradient(x + a * dir, lambda);
    Vec gm = lagrangian_gradient(x - a * dir, lambda);
    return (gp - gm) * (vnorm / (2.0 * a));
  }

  double lagrangian_value(const Vec& x, const Vec& lambda) const {
    double val = f_(x);
    if (n_constraints_ > 0 && !lambda.isZero(0.0)) val += lambda.dot(g_(x));
    return val;
  }

  // Mixed second difference of the scalar Lagrangian when no accurate
  // gradient is available: (W v)_i ~ d^2 L / (dx_i d(v-direction)).
  Vec fd_w_action_from_values(const Vec& x, const Vec& lambda, const Vec& v) const {
    const double root4_eps = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
    const double vnorm = v.norm();
    const Vec dir = v / vnorm;
    const double h = root4_eps * (1.0 + x.lpNorm<Eigen::Infinity>());
    const double a = root4_eps * (1.0 + x.norm());
    Vec wv(n_);
    Vec xp = x + a * dir;
    Vec xm = x - a * dir;
    for (Index i = 0; i < n_; ++i) {
      const double xpi = xp[i];
      const double xmi = xm[i];
      xp[i] = xpi + h;
      xm[i] = xmi + h;
      const double lpp = lagrangian_value(xp, lambda);
      const double lpm = lagrangian_value(xm, lambda);
      xp[i] = xpi - h;
      xm[i] = xmi - h;
      const double lmp = lagrangian_value(xp, lambda);
      const double lmm = lagrangian_value(xm, lambda);
      xp[i] = xpi;
      xm[i] = xmi;
      wv[i] = (lpp - lpm - lmp + lmm) / (4.0 * h * a);
    }
    return wv * vnorm;
  }

  Index n_;
  Index n_constraints_;
  std::function<double(const Vec&)> f_;
  std::function<Vec(const Vec&)> g_;
  DerivativeOracle oracle_;
  EvalCounts counts_;
};

}  // namespace lfpsqp

#endif  // LFPSQP_DERIV_HPP
