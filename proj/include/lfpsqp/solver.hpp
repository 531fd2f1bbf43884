#pragma once
#ifndef LFPSQP_SOLVER_HPP
#define LFPSQP_SOLVER_HPP

#include "lfpsqp/deriv.hpp"
#include "lfpsqp/direction.hpp"
#include "lfpsqp/factor.hpp"
#include "lfpsqp/linesearch.hpp"
#include "lfpsqp/problem.hpp"
#include "lfpsqp/retract.hpp"
#include "lfpsqp/trace.hpp"
#include "lfpsqp/types.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lfpsqp {

enum class DirectionMethod { gradient, newton };

enum class SolveStatus { converged_f, converged_x, converged_grad, max_iter, line_search_failed };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged_f: return "converged_f";
    case SolveStatus::converged_x: return "converged_x";
    case SolveStatus::converged_grad: return "converged_grad";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

inline bool is_converged(SolveStatus s) {
  return s == SolveStatus::converged_f || s == SolveStatus::converged_x || s == SolveStatus::converged_grad;
}

struct SolveOptions {
  DirectionMethod direction = DirectionMethod::newton;
  RetractionVariant retraction = RetractionVariant::projection;
  LineSearchConfig linesearch;
  double eps_c = 1e-6;
  double eps_rank = kDefaultRankTol;
  double kappa = 0.5;
  double mu0 = 0.01;
  double ftol = 1e-8;
  double xtol = 1e-10;
  double gtol = 1e-6;
  long max_iter = 1000;
  /// Inner iteration cap of the retractions.
  Index retraction_k_max = 100;
  /// Keep every accepted iterate (original coordinates) in the result.
  bool record_iterates = false;
  /// Called after each trace row is appended.
  std::function<void(const TraceRecord&)> on_record;

  void validate() const {
    auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!pos(eps_c) || !pos(eps_rank) || !pos(kappa) || !pos(mu0) || !pos(ftol) || !pos(xtol) || !pos(gtol))
      throw Error(Errc::invalid_argument, "solver tolerances must be positive and finite");
    if (max_iter < 0 || retraction_k_max < 1)
      throw Error(Errc::invalid_argument, "iteration limits must be nonnegative");
    linesearch.validate();
  }
};

/// Multipliers in the convention grad f + J^T lambda = 0 on the stacked
/// constraints of the transformed problem.
struct SolveMultipliers {
  Vec c;       ///< equality constraints (m)
  Vec d;       ///< inequality slack equations d(x) - s = 0 (p)
  Vec bounds;  ///< h-rows of the original variables (n); empty in the equality case
  Vec slacks;  ///< h-rows of the slacks (p)
};

struct SolveResult {
  Vec x_final;
  double f_final = 0.0;
  SolveMultipliers lambda;
  SolveStatus status = SolveStatus::max_iter;
  long iterations = 0;
  double proj_grad_norm = 0.0;
  double constraint_violation = 0.0;
  EvalCounts counts;
  std::vector<TraceRecord> trace;
  std::vector<Vec> iterates;
  /// Number of Newton steps whose CG stopped on its iteration cap.
  long cg_cap_hits = 0;
};

/// Largest violation of c = 0, the inequality bounds and the variable bounds
/// at x in original coordinates.
inline double original_violation(const ProblemSpec& spec, const Vec& x) {
  double v = 0.0;
  const Vec g = spec.constraints(x);
  if (spec.m > 0) v = std::max(v, inf_norm(g.head(spec.m)));
  auto bound_viol = [&](const Vec& val, const Vec& lo, const Vec& hi) {
    for (Index k = 0; k < val.size(); ++k) v = std::max({v, lo[k] - val[k], val[k] - hi[k]});
  };
  if (spec.p > 0) bound_viol(g.tail(spec.p), spec.lower_d(), spec.upper_d());
  bound_viol(x, spec.lower_x(), spec.upper_x());
  return v;
}

namespace detail {

/// Equality-only problems: iterate directly on {c(x) = 0} in R^n.
class EqualityPath {
 public:
  using Point = Vec;

  EqualityPath(const ProblemSpec& spec, Evaluator& eval, const SolveOptions& opts)
      : spec_(spec), eval_(eval), opts_(opts) {
    cfg_.eps_c = opts.eps_c;
    cfg_.mu0 = opts.mu0;
    cfg_.k_max = opts.retraction_k_max;
    cfg_.variant = opts.retraction;
  }

  Point start(const Vec& x0) {
    if (x0.size() != spec_.n) throw Error(Errc::invalid_argument, "starting point has wrong length");
    if (!x0.allFinite()) throw Error(Errc::infeasible_start, "starting point is not finite");
    const Vec c = eval_.constraints(x0);
    if (inf_norm(c) <= opts_.eps_c) return x0;
    try {
      RetractionConfig cfg = cfg_;
      cfg.variant = RetractionVariant::projection;
      return projection_retract(x0, Vec::Zero(x0.size()), c_eval(), jac_eval(), cfg).point;
    } catch (const Error& e) {
      if (!is_retraction_failure(e.code())) throw;
      throw Error(Errc::infeasible_start, std::string("cannot project start onto constraints: ") + e.what());
    }
  }

  void refresh(const Point& x) {
    grad_ = eval_.gradient(x);
    fact_ = factor_equality(eval_.jacobian(x), opts_.eps_rank);
    pg_ = fact_.project(grad_);
    lambda_ = fact_.multipliers(grad_);
  }

  double proj_grad_norm() const { return pg_.norm(); }
  const Vec& proj_grad() const { return pg_; }

  Direction gradient() const { return gradient_direction(fact_, grad_); }
  Direction newton(const Point& x, double delta) {
    return newton_direction(eval_, x, lambda_, fact_, grad_, delta);
  }

  struct Retracted {
    Point point;
    Index inner_iters;
  };

  Retracted retract(const Point& x, const Vec& step) {
    RetractionResult r = (opts_.retraction == RetractionVariant::quasi_newton && fact_.full_rank())
                             ? qn_retract_equality(x, step, c_eval(), fact_, cfg_)
                             : projection_retract(x, step, c_eval(), jac_eval(), cfg_);
    return {std::move(r.point), r.inner_iters};
  }

  Vec original(const Point& x) const { return x; }
  Vec stacked(const Point& x) const { return x; }

  SolveMultipliers multipliers() const {
    SolveMultipliers out;
    out.c = lambda_;
    out.d = Vec(0);
    out.bounds = Vec(0);
    out.slacks = Vec(0);
    return out;
  }

 private:
  std::function<Vec(const Vec&)> c_eval() {
    return [this](const Vec& x) { return eval_.constraints(x); };
  }
  std::function<Mat(const Vec&)> jac_eval() {
    return [this](const Vec& x) { return eval_.jacobian(x); };
  }

  const ProblemSpec& spec_;
  Evaluator& eval_;
  const SolveOptions& opts_;
  RetractionConfig cfg_;
  Vec grad_, pg_, lambda_;
  EqualityFactorization fact_;
};

/// General problems: iterate on {c'(x) = 0, h(x, y) = 0} in R^{2n'}.
class MixedPath {
 public:
  using Point = AugmentedPoint;

  MixedPath(const TransformedProblem& tp, Evaluator& eval, const SolveOptions& opts)
      : tp_(tp), eval_(eval), opts_(opts) {
    cfg_.eps_c = opts.eps_c;
    cfg_.mu0 = opts.mu0;
    cfg_.k_max = opts.retraction_k_max;
    cfg_.variant = opts.retraction;
  }

  Point start(const Vec& x0) {
    AugmentedPoint z = init_augmented(tp_, x0, opts_.eps_c);
    const Vec c = c_prime(z.x);
    if (inf_norm(c) <= opts_.eps_c && inf_norm(eval_h(tp_, z)) <= cfg_.h_tol) return z;
    try {
      return projection_retract_mixed(tp_, z, Vec::Zero(2 * tp_.n_prime), c_prime_fn(), c_prime_jac_fn(), cfg_)
          .point;
    } catch (const Error& e) {
      if (!is_retraction_failure(e.code())) throw;
      throw Error(Errc::infeasible_start, std::string("cannot project start onto constraints: ") + e.what());
    }
  }

  void refresh(const Point& z) {
    grad_x_ = Vec::Zero(tp_.n_prime);
    grad_x_.head(tp_.n()) = eval_.gradient(z.x.head(tp_.n()));
    fact_ = factor_mixed(tp_, z, c_prime_jac(z.x), opts_.eps_rank);
    pg_ = fact_.project_gradient(grad_x_);
    lambda_ = fact_.multipliers(grad_x_);
  }

  double proj_grad_norm() const { return pg_.norm(); }
  const Vec& proj_grad() const { return pg_; }

  Direction gradient() const { return gradient_direction(fact_, grad_x_); }
  Direction newton(const Point& z, double delta) {
    return newton_direction(eval_, tp_, z, lambda_, fact_, grad_x_, delta);
  }

  struct Retracted {
    Point point;
    Index inner_iters;
  };

  Retracted retract(const Point& z, const Vec& step) {
    MixedRetractionResult r =
        (opts_.retraction == RetractionVariant::quasi_newton && fact_.full_rank())
            ? qn_retract_mixed(tp_, z, step, c_prime_fn(), fact_, cfg_)
            : projection_retract_mixed(tp_, z, step, c_prime_fn(), c_prime_jac_fn(), cfg_);
    return {std::move(r.point), r.inner_iters};
  }

  Vec original(const Point& z) const { return z.x.head(tp_.n()); }
  Vec stacked(const Point& z) const { return z.stacked(); }

  SolveMultipliers multipliers() const {
    SolveMultipliers out;
    out.c = lambda_.c_prime.head(tp_.m());
    out.d = lambda_.c_prime.tail(tp_.p());
    out.bounds = lambda_.h.head(tp_.n());
    out.slacks = lambda_.h.tail(tp_.p());
    return out;
  }

 private:
  Vec c_prime(const Vec& x_aug) {
    if (tp_.m_prime == 0) return Vec(0);
    return tp_.c_prime_from(eval_.constraints(x_aug.head(tp_.n())), x_aug);
  }
  Mat c_prime_jac(const Vec& x_aug) {
    if (tp_.m_prime == 0) return Mat(0, tp_.n_prime);
    return tp_.c_prime_jacobian_from(eval_.jacobian(x_aug.head(tp_.n())));
  }
  std::function<Vec(const Vec&)> c_prime_fn() {
    return [this](const Vec& x_aug) { return c_prime(x_aug); };
  }
  std::function<Mat(const Vec&)> c_prime_jac_fn() {
    return [this](const Vec& x_aug) { return c_prime_jac(x_aug); };
  }

  const TransformedProblem& tp_;
  Evaluator& eval_;
  const SolveOptions& opts_;
  RetractionConfig cfg_;
  Vec grad_x_, pg_;
  MixedFactorization::Multipliers lambda_;
  MixedFactorization fact_;
};

template <class Path>
SolveResult run_outer_loop(Path& path, const ProblemSpec& spec, Evaluator& eval, const Vec& x0,
                           const SolveOptions& opts) {
  using Point = typename Path::Point;
  SolveResult result;

  Point z = path.start(x0);
  double f = eval.objective(path.original(z));
  if (!std::isfinite(f)) throw Error(Errc::infeasible_start, "objective is not finite at the start");
  path.refresh(z);

  auto push_row = [&](long iter, double step_norm, double alpha, std::string_view kind, Index cg_iters,
                      Index inner_iters) {
    TraceRecord row;
    row.iter = iter;
    row.f = f;
    row.proj_grad_norm = path.proj_grad_norm();
    row.constraint_viol_inf = original_violation(spec, path.original(z));
    row.step_norm = step_norm;
    row.alpha = alpha;
    row.direction_kind = std::string(kind);
    row.cg_iters = static_cast<long>(cg_iters);
    row.retract_inner_iters = static_cast<long>(inner_iters);
    const EvalCounts& c = eval.counts();
    row.cum_f_evals = c.f;
    row.cum_grad_evals = c.grad;
    row.cum_jac_evals = c.jac;
    row.cum_w_actions = c.w_action;
    result.trace.push_back(row);
    if (opts.record_iterates) result.iterates.push_back(path.original(z));
    if (opts.on_record) opts.on_record(result.trace.back());
  };
  push_row(0, 0.0, 0.0, "initial", 0, 0);

  struct Accepted {
    Point point;
    double f;
    double alpha;
    Index inner_iters;
  };

  // Line search along the retraction arc; throws LineSearchFailed.
  auto search = [&](const Direction& dir) -> Accepted {
    auto arc = [&](double alpha) { return path.retract(z, alpha * dir.step); };
    auto f_eval = [&](const auto& r) { return eval.objective(path.original(r.point)); };
    if (opts.linesearch.method == LineSearchMethod::golden) {
      auto ls = golden(f_eval, arc, dir.step.norm(), opts.linesearch);
      return {std::move(ls.point.point), ls.f_new, ls.alpha, ls.point.inner_iters};
    }
    // grad f . dx equals P[grad f] . dx for tangent dx.
    const double slope = path.proj_grad().dot(dir.step);
    auto ls = armijo(f_eval, arc, f, slope, opts.linesearch);
    return {std::move(ls.point.point), ls.f_new, ls.alpha, ls.point.inner_iters};
  };

  double g_prev = kInf;
  result.status = SolveStatus::max_iter;
  for (long iter = 1;; ++iter) {
    if (iter > opts.max_iter) {
      result.status = SolveStatus::max_iter;
      break;
    }
    const double g_now = path.proj_grad_norm();
    Direction dir;
    if (opts.direction == DirectionMethod::newton) {
      try {
        dir = path.newton(z, dembo_tolerance(opts.kappa, g_now, g_prev));
        if (dir.hit_iteration_cap) ++result.cg_cap_hits;
      } catch (const Error& e) {
        if (e.code() != Errc::indefinite_projection) throw;
        dir = path.gradient();
      }
    } else {
      dir = path.gradient();
    }

    std::optional<Accepted> acc;
    if (dir.step.size() == 0 || dir.step.isZero(0.0)) {
      acc = Accepted{z, f, 0.0, 0};
    } else {
      try {
        acc = search(dir);
      } catch (const Error& e) {
        if (e.code() != Errc::line_search_failed) throw;
      }
      if (!acc && dir.kind != DirectionKind::gradient) {
        Direction grad_dir = path.gradient();
        if (!grad_dir.step.isZero(0.0)) {
          try {
            acc = search(grad_dir);
            dir = std::move(grad_dir);
          } catch (const Error& e) {
            if (e.code() != Errc::line_search_failed) throw;
          }
        }
      }
      if (!acc) {
        result.status = g_now < opts.gtol ? SolveStatus::converged_grad : SolveStatus::line_search_failed;
        result.iterations = iter - 1;
        break;
      }
    }

    const Vec z_old = path.stacked(z);
    const double f_old = f;
    z = std::move(acc->point);
    f = acc->f;
    g_prev = g_now;
    path.refresh(z);
    const Vec z_new = path.stacked(z);
    const double dz = (z_new - z_old).norm();
    push_row(iter, dz, acc->alpha, to_string(dir.kind), dir.cg_iters, acc->inner_iters);
    result.iterations = iter;

    if (std::abs(f_old - f) < opts.ftol * (1.0 + std::abs(f))) {
      result.status = SolveStatus::converged_f;
      break;
    }
    if (dz < opts.xtol * (1.0 + z_new.norm())) {
      result.status = SolveStatus::converged_x;
      break;
    }
    if (path.proj_grad_norm() < opts.gtol) {
      result.status = SolveStatus::converged_grad;
      break;
    }
  }

  result.x_final = path.original(z);
  result.f_final = f;
  result.lambda = path.multipliers();
  result.proj_grad_norm = path.proj_grad_norm();
  result.constraint_violation = original_violation(spec, result.x_final);
  result.counts = eval.counts();
  return result;
}

}  // namespace detail

/// Feasible SQP outer loop. Every accepted iterate satisfies the constraints
/// to eps_c; a failed line search is reported through the status.
inline SolveResult solve(const ProblemSpec& spec, const Vec& x0, const SolveOptions& opts = {}) {
  opts.validate();
  spec.validate();
  if (x0.size() != spec.n)
    throw Error(Errc::invalid_argument, "starting point has length " + std::to_string(x0.size()) +
                                            ", expected " + std::to_string(spec.n));
  Evaluator eval = make_evaluator(spec);
  const TransformedProblem tp = transform(spec);
  if (tp.is_equality_only) {
    detail::EqualityPath path(spec, eval, opts);
    return detail::run_outer_loop(path, spec, eval, x0, opts);
  }
  detail::MixedPath path(tp, eval, opts);
  return detail::run_outer_loop(path, spec, eval, x0, opts);
}

}  // namespace lfpsqp

#endif  // LFPSQP_SOLVER_HPP
