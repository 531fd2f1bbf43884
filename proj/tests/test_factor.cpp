#include "lfpsqp/factor.hpp"
#include "lfpsqp/oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lfpsqp;
using testutil::vec;

TEST(Factor, SphereAtE1) {
  Mat j = Mat::Zero(1, 3);
  j(0, 0) = 2.0;
  const EqualityFactorization f = factor_equality(j);
  EXPECT_EQ(f.rank, 1);
  EXPECT_NEAR(f.sigma[0], 2.0, 1e-14);
  EXPECT_NEAR(std::abs(f.U(0, 0)), 1.0, 1e-14);
}

TEST(Factor, DuplicatedRowsRankOne) {
  const Vec x = vec({0.6, 0.8, 0.0});
  Mat j(2, 3);
  j.row(0) = 2.0 * x.transpose();
  j.row(1) = 2.0 * x.transpose();
  const EqualityFactorization f = factor_equality(j);
  EXPECT_NEAR(f.sigma[0], 2.0 * std::sqrt(2.0), 1e-13);
  EXPECT_NEAR(f.sigma[1], 0.0, 1e-13);
  EXPECT_EQ(f.rank, 1);
}

TEST(Factor, ZeroJacobianProjectsToIdentity) {
  const EqualityFactorization f = factor_equality(Mat::Zero(2, 4));
  EXPECT_EQ(f.rank, 0);
  const Vec g = vec({1, 2, 3, 4});
  EXPECT_EQ(f.project(g), g);
  EXPECT_EQ(f.multipliers(g), Vec::Zero(2));
}

TEST(Factor, RayleighProjectionAndMultiplier) {
  const Index n = 5;
  const Vec a = vec({5, 4, 3, 2, 1});
  for (Index k = 0; k < n; ++k) {
    Vec x = Vec::Zero(n);
    x[k] = 1.0;
    const Vec grad = (a.array() * x.array()).matrix();
    const EqualityFactorization f = factor_equality(Mat(2.0 * x.transpose()));
    EXPECT_LE(f.project(grad).norm(), 1e-14);
    EXPECT_NEAR(f.multipliers(grad)[0], -a[k] / 2.0, 1e-14);
    // duplicated constraint splits evenly
    Mat j2(2, n);
    j2.row(0) = 2.0 * x.transpose();
    j2.row(1) = 2.0 * x.transpose();
    const Vec l2 = factor_equality(j2).multipliers(grad);
    EXPECT_NEAR(l2[0], -a[k] / 4.0, 1e-13);
    EXPECT_NEAR(l2[1], -a[k] / 4.0, 1e-13);
  }
}

TEST(Factor, GradientOrthogonalToRangeGivesZeroMultiplier) {
  Mat j = Mat::Zero(1, 3);
  j(0, 0) = 1.0;
  EXPECT_LE(factor_equality(j).multipliers(vec({0, 1, 1})).norm(), 1e-15);
}

TEST(Factor, EqualityInvariantsRandom) {
  bench::Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat j = testutil::random_mat(rng, 5, 20);
    const EqualityFactorization f = factor_equality(j);
    const Mat ur = f.U.leftCols(f.rank);
    EXPECT_LE((ur.transpose() * ur - Mat::Identity(f.rank, f.rank)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((f.U * f.sigma.asDiagonal() * f.V.transpose() - j.transpose()).cwiseAbs().maxCoeff(),
              1e-8 * f.sigma[0]);
    const Vec g = rng.normal_vec(20);
    const Vec pg = f.project(g);
    EXPECT_LE((f.project(pg) - pg).norm(), 1e-10);
    EXPECT_LE((j * pg).norm(), 1e-8 * f.sigma[0] * g.norm());
    // normal equations J J^T lambda = -J grad
    const Vec lam = f.multipliers(g);
    EXPECT_LE((j * j.transpose() * lam + j * g).norm(), 1e-8 * (1 + (j * g).norm()));
    EXPECT_LE((lam - oracle::min_norm_multipliers(j, g)).norm(), 1e-8 * (1 + lam.norm()));
  }
}

namespace {

ProblemSpec mixed_spec(const Vec& lo, const Vec& hi, Index m) {
  ProblemSpec spec;
  spec.n = lo.size();
  spec.f = [](const Vec& x) { return x.sum(); };
  spec.x_lower = lo;
  spec.x_upper = hi;
  spec.m = m;
  if (m > 0) spec.c = [m](const Vec& x) { return Vec(Vec::Constant(m, x.squaredNorm() - 1.0)); };
  return spec;
}

}  // namespace

TEST(Factor, MixedProjectionOfUnboundedPair) {
  // One free variable carried through the augmented path (D_x = D_y = 1/sqrt 2).
  const TransformedProblem tp = transform(mixed_spec(vec({-kInf}), vec({kInf}), 0));
  const AugmentedPoint z{vec({0.3}), vec({0.3})};
  const MixedFactorization f = factor_mixed(tp, z, Mat(0, 1));
  EXPECT_NEAR(f.Dx[0], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.Dy[0], -1.0 / std::sqrt(2.0), 1e-15);
  const double g = 3.0;
  const Vec p = f.project_gradient(vec({g}));
  // h = x - y has gradient (1, -1): removing it leaves (g/2, g/2).
  EXPECT_NEAR(p[0], g / 2, 1e-15);
  EXPECT_NEAR(p[1], g / 2, 1e-15);
}

TEST(Factor, MixedTangentInputUnchanged) {
  const TransformedProblem tp = transform(mixed_spec(vec({-kInf}), vec({kInf}), 0));
  const MixedFactorization f = factor_mixed(tp, {vec({0.3}), vec({0.3})}, Mat(0, 1));
  const Vec t = vec({1.0, 1.0});
  EXPECT_LE((f.project(t) - t).norm(), 1e-15);
}

TEST(Factor, MixedInvariantsRandom) {
  bench::Rng rng(8);
  const Vec lo = vec({0.0, -1.0, -kInf, -kInf, 0.5});
  const Vec hi = vec({kInf, 1.0, 2.0, kInf, 3.0});
  for (Index m : {0, 1, 2}) {
    const TransformedProblem tp = transform(mixed_spec(lo, hi, m));
    for (int trial = 0; trial < 20; ++trial) {
      Vec x(5);
      x << 3 * rng.uniform(), -1 + 2 * rng.uniform(), 2 - 4 * rng.uniform(), rng.normal(), 0.5 + 2.5 * rng.uniform();
      const AugmentedPoint z = init_augmented(tp, x, 1e-6);
      const Mat jac = testutil::random_mat(rng, m, 5);
      const MixedFactorization f = factor_mixed(tp, z, jac);
      const Index np = 5;
      EXPECT_LE(((f.Dx.array().square() + f.Dy.array().square()) - 1.0).abs().maxCoeff(), 1e-14);
      const Mat ux = f.Ux.leftCols(f.rank), uy = f.Uy.leftCols(f.rank);
      if (f.rank > 0)
        EXPECT_LE((ux.transpose() * ux + uy.transpose() * uy - Mat::Identity(f.rank, f.rank)).cwiseAbs().maxCoeff(),
                  1e-10);
      // U is orthogonal to every column of D
      const Mat ut_d = ux.transpose() * Mat(f.Dx.asDiagonal()) + uy.transpose() * Mat(f.Dy.asDiagonal());
      EXPECT_LE(ut_d.size() ? ut_d.cwiseAbs().maxCoeff() : 0.0, 1e-10);
      EXPECT_EQ(f.full_jacobian_rank(), np + m);

      // Projected gradient lies in the null space of the augmented Jacobian.
      const Vec g = rng.normal_vec(np);
      const Vec p = f.project_gradient(g);
      const Vec kx = tp.h_jac_x(z.x), ky = tp.h_jac_y(z.y);
      const Vec hpart = (kx.array() * p.head(np).array() + ky.array() * p.tail(np).array()).matrix();
      EXPECT_LE(hpart.norm(), 1e-10 * (1 + g.norm()));
      if (m > 0) EXPECT_LE((jac * p.head(np)).norm(), 1e-8 * (1 + jac.norm()) * g.norm());
      EXPECT_LE((f.project(p) - p).norm(), 1e-10);

      // Multipliers solve the least-squares problem on the stacked Jacobian.
      const MixedFactorization::Multipliers lam = f.multipliers(g);
      Mat full = Mat::Zero(np + m, 2 * np);
      full.topLeftCorner(np, np) = kx.asDiagonal();
      full.topRightCorner(np, np) = ky.asDiagonal();
      full.bottomLeftCorner(m, np) = jac;
      Vec grad_z = Vec::Zero(2 * np);
      grad_z.head(np) = g;
      Vec lam_all(np + m);
      lam_all << lam.h, lam.c_prime;
      const Vec oracle_lam = oracle::min_norm_multipliers(full, grad_z);
      const Vec res_ours = grad_z + full.transpose() * lam_all;
      const Vec res_oracle = grad_z + full.transpose() * oracle_lam;
      EXPECT_NEAR(res_ours.norm(), res_oracle.norm(), 1e-8 * (1 + g.norm()));
    }
  }
}
