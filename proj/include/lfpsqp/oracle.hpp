#pragma once
#ifndef LFPSQP_ORACLE_HPP
#define LFPSQP_ORACLE_HPP

// Reference computations used to check the solver. None of these share code
// with the solver's own linear algebra.

#include "lfpsqp/types.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <vector>

namespace lfpsqp::oracle {

/// Smallest eigenvalue of a symmetric matrix by dense eigendecomposition.
inline double min_eigenvalue(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(Errc::linalg_failure, "eigensolver failed");
  return es.eigenvalues()[0];
}

inline double min_eigenvalue(const Eigen::SparseMatrix<double>& a) { return min_eigenvalue(Mat(a)); }

struct GridResult {
  Vec x;
  double f = 0.0;
};

/// Brute-force minimum of f over the feasible points of a 2-D box, on an
/// N x N grid followed by `zooms` local refinements. Wherever a feasible
/// grid point neighbours an infeasible one, the boundary between them is
/// located by bisection and offered as a candidate too, so optima sitting on
/// a curved boundary are resolved to far below the grid spacing. Each
/// refinement re-centres a 4-cell window on the incumbent until it stops
/// moving, then shrinks the window tenfold.
inline GridResult grid_search_2d(const std::function<double(double, double)>& f,
                                 const std::function<bool(double, double)>& feasible, double x_lo,
                                 double x_hi, double y_lo, double y_hi, int points = 2001, int zooms = 6) {
  GridResult best;
  best.x = Vec::Zero(2);
  best.f = kInf;
  bool moved = false;
  auto offer = [&](double x, double y) {
    const double v = f(x, y);
    if (v < best.f) {
      best.f = v;
      best.x << x, y;
      moved = true;
    }
  };
  auto scan = [&](double xl, double xh, double yl, double yh, int pts) {
    const double hx = (xh - xl) / (pts - 1);
    const double hy = (yh - yl) / (pts - 1);
    std::vector<char> ok(static_cast<std::size_t>(pts) * pts);
    auto at = [&](int i, int j) -> char& { return ok[static_cast<std::size_t>(i) * pts + j]; };
    for (int i = 0; i < pts; ++i)
      for (int j = 0; j < pts; ++j) at(i, j) = feasible(xl + i * hx, yl + j * hy);
    moved = false;
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int i = 0; i < pts; ++i) {
      for (int j = 0; j < pts; ++j) {
        if (!at(i, j)) continue;
        const double x = xl + i * hx, y = yl + j * hy;
        offer(x, y);
        for (int e = 0; e < 4; ++e) {
          const int ni = i + di[e], nj = j + dj[e];
          if (ni < 0 || nj < 0 || ni >= pts || nj >= pts || at(ni, nj)) continue;
          // Bisect on the segment towards the infeasible neighbour.
          double lo = 0.0, hi = 1.0;
          for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(x + mid * di[e] * hx, y + mid * dj[e] * hy) ? lo : hi) = mid;
          }
          offer(x + lo * di[e] * hx, y + lo * dj[e] * hy);
        }
      }
    }
    return moved;
  };
  scan(x_lo, x_hi, y_lo, y_hi, points);
  if (!std::isfinite(best.f)) throw Error(Errc::invalid_argument, "grid search found no feasible point");
  double wx = 2.0 * (x_hi - x_lo) / (points - 1);
  double wy = 2.0 * (y_hi - y_lo) / (points - 1);
  for (int level = 0; level < zooms; ++level) {
    for (int pass = 0; pass < 1000; ++pass) {
      const double cx = best.x[0], cy = best.x[1];
      if (!scan(cx - wx, cx + wx, cy - wy, cy + wy, 201)) break;
    }
    wx *= 0.1;
    wy *= 0.1;
  }
  return best;
}

/// Solves  W dx + U dl = b,  U^T dx = 0  through the null-space reduced
/// system Z^T W Z w = Z^T b, with Z from a full QR of U.
inline Vec reduced_kkt_solve(const Mat& w, const Mat& u, const Vec& b) {
  const Index n = w.rows();
  Mat z;
  if (u.cols() == 0) {
    z = Mat::Identity(n, n);
  } else {
    Eigen::FullPivHouseholderQR<Mat> qr(u);
    const Index r = qr.rank();
    const Mat q = qr.matrixQ();
    z = q.rightCols(n - r);
  }
  const Mat reduced = z.transpose() * w * z;
  const Vec rhs = z.transpose() * b;
  const Vec coeff = reduced.fullPivLu().solve(rhs);
  return z * coeff;
}

/// Minimal-norm least-squares multipliers: argmin ||grad_f + J^T lambda||
/// of least norm, via a complete orthogonal decomposition of J^T.
inline Vec min_norm_multipliers(const Mat& jac, const Vec& grad_f, double threshold = 1e-10) {
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(jac.transpose());
  cod.setThreshold(threshold);
  cod.compute(jac.transpose());
  return cod.solve(-grad_f);
}

}  // namespace lfpsqp::oracle

#endif  // LFPSQP_ORACLE_HPP
