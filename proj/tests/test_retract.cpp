#include "lfpsqp/retract.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lfpsqp;
using testutil::vec;

namespace {

auto sphere_c = [](const Vec& x) { return Vec::Constant(1, x.squaredNorm() - 1.0); };
auto sphere_j = [](const Vec& x) { return Mat(2.0 * x.transpose()); };

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

ProblemSpec scalar_box(double lo, double hi) {
  ProblemSpec spec;
  spec.n = 1;
  spec.f = [](const Vec& x) { return x[0]; };
  spec.x_lower = Vec::Constant(1, lo);
  spec.x_upper = Vec::Constant(1, hi);
  return spec;
}

RetractionConfig tight() {
  RetractionConfig cfg;
  cfg.eps_c = 1e-12;
  return cfg;
}

}  // namespace

TEST(Retract, QnSphereExample) {
  const Vec x = vec({1, 0, 0});
  const EqualityFactorization f = factor_equality(sphere_j(x));
  const RetractionResult r = qn_retract_equality(x, vec({0, 0.6, 0}), sphere_c, f, tight());
  EXPECT_LE((r.point - vec({0.8, 0.6, 0})).norm(), 1e-10);
  EXPECT_LE(r.constraint_norm, 1e-12);
}

TEST(Retract, QnZeroStep) {
  const Vec x = vec({1, 0, 0});
  const EqualityFactorization f = factor_equality(sphere_j(x));
  const RetractionResult r = qn_retract_equality(x, Vec::Zero(3), sphere_c, f, {});
  EXPECT_EQ(r.inner_iters, 0);
  EXPECT_EQ(r.point, x);
}

TEST(Retract, QnNoPreimageDiverges) {
  const Vec x = vec({1, 0, 0});
  const EqualityFactorization f = factor_equality(sphere_j(x));
  EXPECT_EQ(code_of([&] { qn_retract_equality(x, vec({0, 2, 0}), sphere_c, f, {}); }), Errc::retraction_diverged);
}

TEST(Retract, ProjectionCircleExamples) {
  {
    const RetractionResult r = projection_retract(vec({0, 1}), vec({0, 1}), sphere_c, sphere_j, tight());
    EXPECT_LE((r.point - vec({0, 1})).norm(), 1e-10);
  }
  {
    const RetractionResult r = projection_retract(vec({1, 0}), vec({0, 0.5}), sphere_c, sphere_j, tight());
    EXPECT_LE((r.point - vec({1, 0.5}) / std::sqrt(1.25)).norm(), 1e-8);
    EXPECT_LE(r.constraint_norm, 1e-12);
  }
}

TEST(Retract, ProjectionZeroStepIsIdentity) {
  const RetractionResult r = projection_retract(vec({1, 0}), Vec::Zero(2), sphere_c, sphere_j, {});
  EXPECT_EQ(r.inner_iters, 0);
  EXPECT_EQ(r.point, vec({1, 0}));
}

TEST(Retract, ProjectionDuplicatedConstraint) {
  auto c2 = [](const Vec& x) { return Vec::Constant(2, x.squaredNorm() - 1.0); };
  auto j2 = [](const Vec& x) {
    Mat j(2, x.size());
    j.row(0) = 2.0 * x.transpose();
    j.row(1) = 2.0 * x.transpose();
    return j;
  };
  const RetractionResult one = projection_retract(vec({1, 0}), vec({0, 0.5}), sphere_c, sphere_j, tight());
  const RetractionResult two = projection_retract(vec({1, 0}), vec({0, 0.5}), c2, j2, tight());
  EXPECT_LE((one.point - two.point).norm(), 1e-8);
}

TEST(Retract, QnAndProjectionAgreeToSecondOrder) {
  const Vec x = vec({1, 0, 0});
  const EqualityFactorization f = factor_equality(sphere_j(x));
  for (double t : {1e-1, 1e-2}) {
    const Vec dx = vec({0, t, 0.5 * t});
    const Vec a = qn_retract_equality(x, dx, sphere_c, f, tight()).point;
    const Vec b = projection_retract(x, dx, sphere_c, sphere_j, tight()).point;
    EXPECT_LE((a - b).norm(), 2.0 * t * t);
  }
}

TEST(Retract, HRetractLineAndCircle) {
  {
    const TransformedProblem tp = transform(scalar_box(-kInf, kInf));
    const AugmentedPoint z = h_retract(tp, {vec({1}), vec({1})}, vec({2, 2}));
    EXPECT_EQ(z.x[0], 3.0);
    EXPECT_EQ(z.y[0], 3.0);
  }
  {
    const TransformedProblem tp = transform(scalar_box(0, 2));
    const AugmentedPoint z = h_retract(tp, {vec({1}), vec({2})}, vec({1, 0}));
    EXPECT_NEAR(z.x[0], 1 + std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(z.y[0], 1 + std::sqrt(0.5), 1e-15);
    const AugmentedPoint same = h_retract(tp, {vec({1}), vec({2})}, vec({0, 0}));
    EXPECT_EQ(same.x[0], 1.0);
    EXPECT_EQ(same.y[0], 2.0);
  }
}

TEST(Retract, HRetractCircleCentreFails) {
  const TransformedProblem tp = transform(scalar_box(0, 2));
  EXPECT_EQ(code_of([&] { h_retract(tp, {vec({1}), vec({2})}, vec({0, -1})); }), Errc::coordinate_retract_failed);
}

TEST(Retract, HRetractParabolaStaysOnCurve) {
  bench::Rng rng(2);
  for (auto [lo, hi] : std::vector<std::pair<double, double>>{{0.0, kInf}, {-kInf, 1.5}}) {
    const TransformedProblem tp = transform(scalar_box(lo, hi));
    for (int t = 0; t < 50; ++t) {
      const double x0 = std::isfinite(lo) ? lo + 3 * rng.uniform() : hi - 3 * rng.uniform();
      AugmentedPoint z = init_augmented(tp, vec({x0}), 1e-6);
      if (rng.uniform() < 0.5) z.y[0] = 2 * tp.r[0] - z.y[0];  // other branch
      // tangent: (kx, ky) . (dx, dy) = 0
      const double kx = tp.h_jac_x(z.x)[0], ky = tp.h_jac_y(z.y)[0];
      const double scale = 0.3 * rng.normal();
      const AugmentedPoint out = h_retract(tp, z, vec({-ky * scale, kx * scale}));
      EXPECT_LE(std::abs(eval_h(tp, out)[0]), 1e-12);
      if (std::isfinite(lo)) EXPECT_GE(out.x[0], lo);
      if (std::isfinite(hi)) EXPECT_LE(out.x[0], hi);
    }
  }
}

TEST(Retract, MixedZeroStep) {
  ProblemSpec spec = scalar_box(0, 2);
  const TransformedProblem tp = transform(spec);
  const AugmentedPoint z = init_augmented(tp, vec({0.5}), 1e-6);
  auto cp = [](const Vec&) { return Vec(0); };
  auto cj = [](const Vec&) { return Mat(0, 1); };
  const MixedFactorization f = factor_mixed(tp, z, Mat(0, 1));
  const MixedRetractionResult a = qn_retract_mixed(tp, z, Vec::Zero(2), cp, f, {});
  const MixedRetractionResult b = projection_retract_mixed(tp, z, Vec::Zero(2), cp, cj, {});
  EXPECT_EQ(a.point.x, z.x);
  EXPECT_EQ(b.inner_iters, 0);
  EXPECT_EQ(b.point.y, z.y);
}

TEST(Retract, MixedProjectionScalarCircleMatchesGeometry) {
  // No c: projection onto the circle h = 0 is radial about the centre.
  const TransformedProblem tp = transform(scalar_box(0, 2));
  const AugmentedPoint z{vec({1}), vec({2})};
  auto cp = [](const Vec&) { return Vec(0); };
  auto cj = [](const Vec&) { return Mat(0, 1); };
  const Vec dz = vec({0.4, 0.0});
  const MixedRetractionResult r = projection_retract_mixed(tp, z, dz, cp, cj, tight());
  const AugmentedPoint h = h_retract(tp, z, dz);
  EXPECT_LE(std::abs(r.point.x[0] - h.x[0]), 1e-8);
  EXPECT_LE(std::abs(r.point.y[0] - h.y[0]), 1e-8);
  EXPECT_LE(r.h_norm, 1e-12);
}

TEST(Retract, MixedQnMatchesEqualityWithTrivialBounds) {
  ProblemSpec spec;
  spec.n = 3;
  spec.m = 1;
  spec.f = [](const Vec& x) { return x.sum(); };
  spec.c = sphere_c;
  spec.x_lower = Vec::Constant(3, -kInf);
  spec.x_upper = Vec::Constant(3, kInf);
  const TransformedProblem tp = transform(spec);
  const Vec x = vec({0.6, 0.8, 0});
  const AugmentedPoint z{x, x};
  const MixedFactorization mf = factor_mixed(tp, z, sphere_j(x));
  // A tangent step of the augmented manifold: equal x and y moves, tangent to the sphere.
  const Vec t = vec({-0.8, 0.6, 0.3}) * 0.2;
  Vec dz(6);
  dz << t, t;
  const MixedRetractionResult mr = qn_retract_mixed(tp, z, dz, sphere_c, mf, tight());
  const EqualityFactorization ef = factor_equality(sphere_j(x));
  const RetractionResult er = qn_retract_equality(x, t, sphere_c, ef, tight());
  EXPECT_LE((mr.point.x - er.point).norm(), 1e-10);
}

TEST(Retract, MixedProjectionKeepsBothResiduals) {
  ProblemSpec spec;
  spec.n = 3;
  spec.m = 1;
  spec.f = [](const Vec& x) { return x.sum(); };
  spec.c = sphere_c;
  spec.x_lower = Vec::Zero(3);
  spec.x_upper = Vec::Constant(3, kInf);
  const TransformedProblem tp = transform(spec);
  const AugmentedPoint z = init_augmented(tp, vec({0.6, 0.8, 0.0}), 1e-6);
  auto cj = [&](const Vec& xa) { return tp.c_prime_jacobian_from(sphere_j(xa)); };
  RetractionConfig cfg;
  cfg.eps_c = 1e-8;
  bench::Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const MixedFactorization f = factor_mixed(tp, z, cj(z.x));
    const Vec dz = f.project(rng.normal_vec(6)) * 0.3;
    const MixedRetractionResult r = projection_retract_mixed(tp, z, dz, sphere_c, cj, cfg);
    EXPECT_LE(r.constraint_norm, 1e-8);
    EXPECT_LE(r.h_norm, 1e-12);
    EXPECT_GE(r.point.x.minCoeff(), -1e-12);
  }
}
