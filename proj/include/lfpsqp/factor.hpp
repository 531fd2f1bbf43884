#pragma once
#ifndef LFPSQP_FACTOR_HPP
#define LFPSQP_FACTOR_HPP

#include "lfpsqp/problem.hpp"
#include "lfpsqp/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace lfpsqp {

/// Default relative rank tolerance: singular values above
/// kDefaultRankTol * max(1, sigma_1) count toward the numerical rank.
inline constexpr double kDefaultRankTol = 1e-8;

namespace detail {

struct ThinSvd {
  Mat U;
  Vec sigma;
  Mat V;
};

inline ThinSvd thin_svd(const Mat& a) {
  ThinSvd out;
  if (a.cols() == 0) {
    out.U = Mat(a.rows(), 0);
    out.sigma = Vec(0);
    out.V = Mat(0, 0);
    return out;
  }
  if (!a.allFinite()) throw Error(Errc::linalg_failure, "matrix to factor is not finite");
  Eigen::JacobiSVD<Mat, Eigen::ColPivHouseholderQRPreconditioner> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(Errc::linalg_failure, "SVD did not converge");
  out.U = svd.matrixU();
  out.sigma = svd.singularValues();
  out.V = svd.matrixV();
  return out;
}

inline Index numerical_rank(const Vec& sigma, double threshold) {
  Index r = 0;
  while (r < sigma.size() && sigma[r] > threshold) ++r;
  return r;
}

}  // namespace detail

/// Thin SVD U diag(sigma) V^T = J^T of an m x n constraint Jacobian with its
/// numerical rank. The first `rank` columns of U span the normal space.
struct EqualityFactorization {
  Mat U;
  Vec sigma;
  Mat V;
  Index rank = 0;
  double eps_rank = 0.0;

  Index ambient_dim() const { return U.rows(); }
  Index num_constraints() const { return U.cols(); }
  bool full_rank() const { return rank == U.cols(); }
  auto normal_basis() const { return U.leftCols(rank); }

  /// (I - U_r U_r^T) g
  Vec project(const Vec& g) const {
    if (rank == 0) return g;
    Vec coeff = normal_basis().transpose() * g;
    return g - normal_basis() * coeff;
  }

  /// Normal-space coordinates U_r^T g.
  Vec normal_coords(const Vec& g) const { return normal_basis().transpose() * g; }

  /// Least-squares multipliers -V_r Sigma_r^{-1} U_r^T grad f.
  Vec multipliers(const Vec& grad_f) const {
    Vec lambda = Vec::Zero(U.cols());
    if (rank == 0) return lambda;
    Vec coeff = normal_basis().transpose() * grad_f;
    coeff.array() /= sigma.head(rank).array();
    lambda.noalias() = -V.leftCols(rank) * coeff;
    return lambda;
  }
};

/// Factors J^T for J of shape m x n (m <= n). `rank_tol` is relative:
/// the rank threshold is rank_tol * max(1, sigma_1).
inline EqualityFactorization factor_equality(const Mat& jac, double rank_tol = kDefaultRankTol) {
  if (jac.rows() > jac.cols())
    throw Error(Errc::invalid_argument, "factor_equality needs m <= n");
  detail::ThinSvd svd = detail::thin_svd(jac.transpose());
  EqualityFactorization fact;
  fact.U = std::move(svd.U);
  fact.sigma = std::move(svd.sigma);
  fact.V = std::move(svd.V);
  const double sigma1 = fact.sigma.size() ? fact.sigma[0] : 0.0;
  fact.eps_rank = rank_tol * std::max(1.0, sigma1);
  fact.rank = detail::numerical_rank(fact.sigma, fact.eps_rank);
  return fact;
}

/// Block decomposition of the augmented Jacobian transpose
///
///   [ grad_x h   J^T ]   [ D_x  U_x ] [ S  R           ]
///   [ grad_y h   0   ] = [ D_y  U_y ] [ 0  Sigma V^T   ]
///
/// where D = [D_x; D_y] holds the normalised (diagonal) h-gradients, S their
/// norms, R = D_x J^T, and U Sigma V^T is the thin SVD of the projection of
/// [J^T; 0] onto the complement of span(D). Vectors in the ambient space are
/// stacked as (x, y), each of length n'.
struct MixedFactorization {
  Vec Dx, Dy, S;
  Mat Ux, Uy;
  Vec sigma;
  Mat V;
  Mat R;
  Index rank = 0;
  double eps_rank = 0.0;

  Index n_prime() const { return Dx.size(); }
  Index m_prime() const { return Ux.cols(); }
  Index ambient_dim() const { return 2 * Dx.size(); }
  bool full_rank() const { return rank == Ux.cols(); }

  /// Numerical rank of the full augmented Jacobian.
  Index full_jacobian_rank() const { return n_prime() + rank; }

  Vec normal_coords_u(const Vec& z) const {
    const Index np = n_prime();
    return Ux.leftCols(rank).transpose() * z.head(np) + Uy.leftCols(rank).transpose() * z.tail(np);
  }

  Vec apply_u(const Vec& w) const {
    const Index np = n_prime();
    Vec out(2 * np);
    out.head(np).noalias() = Ux.leftCols(rank) * w;
    out.tail(np).noalias() = Uy.leftCols(rank) * w;
    return out;
  }

  /// (I - D D^T - U_r U_r^T) z.
  Vec project(const Vec& z) const {
    const Index np = n_prime();
    Vec out = z;
    Vec dcoef = (Dx.array() * z.head(np).array() + Dy.array() * z.tail(np).array()).matrix();
    out.head(np).array() -= Dx.array() * dcoef.array();
    out.tail(np).array() -= Dy.array() * dcoef.array();
    if (rank > 0) out -= apply_u(normal_coords_u(out));
    return out;
  }

  /// Projection of the objective gradient (grad_x f', 0).
  Vec project_gradient(const Vec& grad_x) const {
    Vec z = Vec::Zero(2 * n_prime());
    z.head(n_prime()) = grad_x;
    return project(z);
  }

  struct Multipliers {
    Vec h;        ///< one per h-row (length n')
    Vec c_prime;  ///< one per c' row (length m')
  };

  /// Least-squares multipliers from the block back-substitution
  ///   lambda_c' = -V_r Sigma_r^{-1} U_{x,r}^T g,  lambda_h = -S^{-1} (D_x g + R lambda_c').
  Multipliers multipliers(const Vec& grad_x) const {
    Multipliers out;
    out.c_prime = Vec::Zero(m_prime());
    if (rank > 0) {
      Vec coeff = Ux.leftCols(rank).transpose() * grad_x;
      coeff.array() /= sigma.head(rank).array();
      out.c_prime.noalias() = -V.leftCols(rank) * coeff;
    }
    Vec rhs = (Dx.array() * grad_x.array()).matrix();
    if (m_prime() > 0) rhs.noalias() += R * out.c_prime;
    out.h = (-rhs.array() / S.array()).matrix();
    return out;
  }
};

/// Builds the mixed factorization at z from the Jacobian of c' (m' x n').
inline MixedFactorization factor_mixed(const TransformedProblem& tp, const AugmentedPoint& z,
                                       const Mat& jac_c_prime, double rank_tol = kDefaultRankTol) {
  const Index np = tp.n_prime;
  const Index mp = tp.m_prime;
  if (jac_c_prime.rows() != mp || jac_c_prime.cols() != np)
    throw Error(Errc::invalid_argument, "c' Jacobian has wrong shape");

  MixedFactorization fact;
  const Vec kx = tp.h_jac_x(z.x);
  const Vec ky = tp.h_jac_y(z.y);
  fact.S = (kx.array().square() + ky.array().square()).sqrt().matrix();
  if ((fact.S.array() <= 0.0).any() || !fact.S.allFinite())
    throw Error(Errc::linalg_failure, "degenerate h-gradient");
  fact.Dx = (kx.array() / fact.S.array()).matrix();
  fact.Dy = (ky.array() / fact.S.array()).matrix();

  const Mat jt = jac_c_prime.transpose();
  fact.R = fact.Dx.asDiagonal() * jt;

  Mat projected(2 * np, mp);
  projected.topRows(np) = (1.0 - fact.Dx.array().square()).matrix().asDiagonal() * jt;
  projected.bottomRows(np) = (-(fact.Dx.array() * fact.Dy.array())).matrix().asDiagonal() * jt;

  detail::ThinSvd svd = detail::thin_svd(projected);
  fact.Ux = svd.U.topRows(np);
  fact.Uy = svd.U.bottomRows(np);
  fact.sigma = std::move(svd.sigma);
  fact.V = std::move(svd.V);
  const double sigma1 = fact.sigma.size() ? fact.sigma[0] : 0.0;
  fact.eps_rank = rank_tol * std::max(1.0, sigma1);
  fact.rank = detail::numerical_rank(fact.sigma, fact.eps_rank);
  return fact;
}

/// Tangent projection of an ambient vector: (I - U_r U_r^T) g.
inline Vec project_tangent(const EqualityFactorization& fact, const Vec& g) { return fact.project(g); }

/// Tangent projection in the augmented space of a stacked (x, y) vector.
inline Vec project_tangent(const MixedFactorization& fact, const Vec& z) { return fact.project(z); }

inline Vec multipliers(const EqualityFactorization& fact, const Vec& grad_f) {
  return fact.multipliers(grad_f);
}

inline MixedFactorization::Multipliers multipliers(const MixedFactorization& fact, const Vec& grad_x) {
  return fact.multipliers(grad_x);
}

}  // namespace lfpsqp

#endif  // LFPSQP_FACTOR_HPP
