#pragma once
#ifndef LFPSQP_TYPES_HPP
#define LFPSQP_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lfpsqp {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Failure categories raised by the library. Every error thrown by lfpsqp is
/// an lfpsqp::Error carrying one of these.
enum class Errc {
  infeasible_bounds,
  degenerate_box,
  infeasible_start,
  invalid_argument,
  non_finite_derivative,
  linalg_failure,
  indefinite_projection,
  retraction_diverged,
  coordinate_retract_failed,
  line_search_failed,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::infeasible_bounds: return "InfeasibleBounds";
    case Errc::degenerate_box: return "DegenerateBox";
    case Errc::infeasible_start: return "InfeasibleStart";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::non_finite_derivative: return "NonFiniteDerivative";
    case Errc::linalg_failure: return "LinAlgFailure";
    case Errc::indefinite_projection: return "IndefiniteProjection";
    case Errc::retraction_diverged: return "RetractionDiverged";
    case Errc::coordinate_retract_failed: return "CoordinateRetractFailed";
    case Errc::line_search_failed: return "LineSearchFailed";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// True for failures a line search treats as "step too long" rather than fatal.
inline bool is_retraction_failure(Errc code) {
  return code == Errc::retraction_diverged || code == Errc::coordinate_retract_failed;
}

inline double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace lfpsqp

#endif  // LFPSQP_TYPES_HPP
