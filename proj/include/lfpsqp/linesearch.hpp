#pragma once
#ifndef LFPSQP_LINESEARCH_HPP
#define LFPSQP_LINESEARCH_HPP

#include "lfpsqp/types.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <type_traits>
#include <utility>

namespace lfpsqp {

enum class LineSearchMethod { armijo, golden };

struct LineSearchConfig {
  LineSearchMethod method = LineSearchMethod::armijo;
  double alpha0 = 1.0;
  double s = 0.5;       ///< backtracking reduction factor
  double sigma = 1e-4;  ///< sufficient-decrease constant
  int max_backtracks = 60;
  double golden_rel_tol = 1e-6;  ///< bracket width tolerance, scaled by ||dx||
  int max_bracket_doublings = 60;
  int max_golden_iters = 200;

  void validate() const {
    if (!(alpha0 > 0.0) || !(s > 0.0 && s < 1.0) || !(sigma > 0.0 && sigma < 1.0) ||
        max_backtracks < 1 || !(golden_rel_tol > 0.0))
      throw Error(Errc::invalid_argument, "line search needs alpha0 > 0 and s, sigma in (0, 1)");
  }
};

template <class Point>
struct LineSearchResult {
  double alpha = 0.0;
  Point point;
  double f_new = 0.0;
  int trials = 0;
};

namespace detail {

/// Calls arc(alpha); retraction failures come back as nullopt.
template <class Arc>
auto try_arc(Arc& arc, double alpha) -> std::optional<std::decay_t<decltype(arc(alpha))>> {
  try {
    return arc(alpha);
  } catch (const Error& e) {
    if (is_retraction_failure(e.code())) return std::nullopt;
    throw;
  }
}

}  // namespace detail

/// Armijo backtracking along alpha -> arc(alpha): returns the first
/// alpha = alpha0 s^k with f_x - f(arc(alpha)) >= -sigma alpha g_dot_d.
/// A failing retraction counts as one rejected trial. `g_dot_d` is the
/// directional derivative grad f . dx and must be negative.
template <class FEval, class Arc>
auto armijo(FEval&& f_eval, Arc&& arc, double f_x, double g_dot_d, const LineSearchConfig& cfg)
    -> LineSearchResult<std::decay_t<decltype(arc(0.0))>> {
  cfg.validate();
  using Point = std::decay_t<decltype(arc(0.0))>;
  if (!(g_dot_d < 0.0)) throw Error(Errc::line_search_failed, "step is not a descent direction");
  double alpha = cfg.alpha0;
  for (int k = 0; k < cfg.max_backtracks; ++k, alpha *= cfg.s) {
    std::optional<Point> point = detail::try_arc(arc, alpha);
    if (!point) continue;
    const double f_new = f_eval(*point);
    if (std::isfinite(f_new) && f_x - f_new >= -cfg.sigma * alpha * g_dot_d)
      return {alpha, std::move(*point), f_new, k + 1};
  }
  throw Error(Errc::line_search_failed,
              "no sufficient decrease after " + std::to_string(cfg.max_backtracks) + " backtracks");
}

/// Golden-section search along the arc with an upper-bounding phase: alpha
/// doubles from alpha0 until f stops decreasing or the arc fails, then the
/// bracket is reduced until its width is below golden_rel_tol * dx_norm. The
/// bracket endpoint with the lower objective is returned.
template <class FEval, class Arc>
auto golden(FEval&& f_eval, Arc&& arc, double dx_norm, const LineSearchConfig& cfg)
    -> LineSearchResult<std::decay_t<decltype(arc(0.0))>> {
  cfg.validate();
  using Point = std::decay_t<decltype(arc(0.0))>;
  struct Sample {
    std::optional<Point> point;
    double f = kInf;
  };
  std::map<double, Sample> cache;
  int trials = 0;
  auto sample = [&](double alpha) -> const Sample& {
    auto it = cache.find(alpha);
    if (it != cache.end()) return it->second;
    Sample s;
    s.point = detail::try_arc(arc, alpha);
    ++trials;
    if (s.point) {
      const double f = f_eval(*s.point);
      if (std::isfinite(f)) s.f = f;
    }
    return cache.emplace(alpha, std::move(s)).first->second;
  };

  const double f0 = sample(0.0).f;
  if (!std::isfinite(f0)) throw Error(Errc::line_search_failed, "arc undefined at alpha = 0");

  double lo = 0.0;
  double hi = cfg.alpha0;
  if (sample(cfg.alpha0).f < f0) {
    double prev = 0.0;
    double mid = cfg.alpha0;
    bool bracketed = false;
    for (int i = 0; i < cfg.max_bracket_doublings; ++i) {
      const double next = 2.0 * mid;
      if (!(sample(next).f < sample(mid).f)) {
        lo = prev;
        hi = next;
        bracketed = true;
        break;
      }
      prev = mid;
      mid = next;
    }
    if (!bracketed) {
      const Sample& best = sample(mid);
      return {mid, *best.point, best.f, trials};
    }
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double tol = cfg.golden_rel_tol * dx_norm;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  for (int it = 0; it < cfg.max_golden_iters && hi - lo >= tol; ++it) {
    if (sample(c).f < sample(d).f) {
      hi = d;
      d = c;
      c = hi - inv_phi * (hi - lo);
    } else {
      lo = c;
      c = d;
      d = lo + inv_phi * (hi - lo);
    }
  }

  const Sample& at_lo = sample(lo);
  const Sample& at_hi = sample(hi);
  const bool pick_lo = at_lo.f <= at_hi.f;
  const double alpha = pick_lo ? lo : hi;
  const Sample& best = pick_lo ? at_lo : at_hi;
  if (!(best.f < f0) || alpha <= 0.0)
    throw Error(Errc::line_search_failed, "golden-section search found no decrease");
  return {alpha, *best.point, best.f, trials};
}

}  // namespace lfpsqp

#endif  // LFPSQP_LINESEARCH_HPP
