#include "lfpsqp/problem.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lfpsqp;
using testutil::vec;

namespace {

ProblemSpec box_problem(double lo, double hi) {
  ProblemSpec spec;
  spec.n = 1;
  spec.f = [](const Vec& x) { return x[0]; };
  spec.x_lower = Vec::Constant(1, lo);
  spec.x_upper = Vec::Constant(1, hi);
  return spec;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

}  // namespace

TEST(Problem, CoefficientTableExample) {
  ProblemSpec spec = box_problem(-1.0, 1.0);
  spec.p = 1;
  spec.d = [](const Vec& x) { return Vec::Constant(1, x[0] * x[0]); };
  spec.d_lower = Vec::Constant(1, -kInf);
  spec.d_upper = Vec::Constant(1, 0.5);
  const TransformedProblem tp = transform(spec);
  EXPECT_EQ(tp.n_prime, 2);
  EXPECT_EQ(tp.m_prime, 1);
  EXPECT_EQ(tp.q, vec({1, 0}));
  EXPECT_EQ(tp.r, vec({0, 0.5}));
  EXPECT_EQ(tp.s, vec({1, 1}));
  EXPECT_EQ(tp.t, vec({1, 0.5}));
  EXPECT_FALSE(tp.is_equality_only);
  // c' = d(x) - slack
  EXPECT_NEAR(tp.c_prime_from(spec.constraints(vec({0.5})), vec({0.5, 0.2}))[0], 0.05, 1e-15);
}

TEST(Problem, UnboundedRowIsIdentityLine) {
  const TransformedProblem tp = transform(box_problem(-kInf, kInf));
  EXPECT_EQ(tp.kind[0], BoundKind::line);
  EXPECT_EQ(vec({tp.q[0], tp.r[0], tp.s[0], tp.t[0]}), vec({0, 0, 0, 0}));
  EXPECT_TRUE(tp.is_equality_only);
  EXPECT_EQ(eval_h(tp, {vec({3}), vec({3})})[0], 0.0);
}

TEST(Problem, LowerBoundRowIsParabola) {
  const TransformedProblem tp = transform(box_problem(0.0, kInf));
  EXPECT_EQ(vec({tp.q[0], tp.r[0], tp.s[0], tp.t[0]}), vec({0, 0, -1, 0}));
  EXPECT_EQ(eval_h(tp, {vec({4}), vec({2})})[0], 0.0);
  EXPECT_EQ(eval_h(tp, {vec({5}), vec({2})})[0], 1.0);
}

TEST(Problem, CircleRow) {
  const TransformedProblem tp = transform(box_problem(0.0, 2.0));
  EXPECT_EQ(vec({tp.q[0], tp.r[0], tp.s[0], tp.t[0]}), vec({1, 1, 1, 1}));
  EXPECT_EQ(eval_h(tp, {vec({0}), vec({1})})[0], 0.0);
}

TEST(Problem, RejectsCrossedBounds) {
  EXPECT_EQ(code_of([] { transform(box_problem(1.0, 0.0)); }), Errc::infeasible_bounds);
  ProblemSpec spec = box_problem(0.0, 1.0);
  spec.p = 1;
  spec.d = [](const Vec& x) { return x; };
  spec.d_lower = Vec::Constant(1, 2.0);
  spec.d_upper = Vec::Constant(1, -2.0);
  EXPECT_EQ(code_of([&] { spec.validate(); }), Errc::infeasible_bounds);
}

TEST(Problem, RejectsDegenerateBox) {
  EXPECT_EQ(code_of([] { transform(box_problem(1.0, 1.0)); }), Errc::degenerate_box);
}

TEST(Problem, RejectsBadShapes) {
  ProblemSpec spec = box_problem(0, 1);
  spec.n = 0;
  EXPECT_EQ(code_of([&] { spec.validate(); }), Errc::invalid_argument);
  spec = box_problem(0, 1);
  spec.m = 2;
  spec.c = [](const Vec& x) { return Vec::Zero(2) + Vec::Constant(2, x[0]); };
  EXPECT_EQ(code_of([&] { spec.validate(); }), Errc::invalid_argument);
}

TEST(Problem, InitAugmentedExamples) {
  {
    const TransformedProblem tp = transform(box_problem(0.0, 2.0));
    const AugmentedPoint z = init_augmented(tp, vec({1.0}), 1e-6);
    EXPECT_DOUBLE_EQ(z.y[0], 2.0);
    EXPECT_EQ(eval_h(tp, z)[0], 0.0);
  }
  {
    const TransformedProblem tp = transform(box_problem(-kInf, kInf));
    EXPECT_EQ(init_augmented(tp, vec({-4.0}), 1e-6).y[0], -4.0);
  }
  {
    const TransformedProblem tp = transform(box_problem(0.0, kInf));
    const AugmentedPoint z = init_augmented(tp, vec({9.0}), 1e-6);
    EXPECT_DOUBLE_EQ(z.y[0], 3.0);
    EXPECT_EQ(eval_h(tp, z)[0], 0.0);
  }
}

TEST(Problem, InitAugmentedSetsSlacksAndClamps) {
  ProblemSpec spec = box_problem(0.0, 1.0);
  spec.p = 1;
  spec.d = [](const Vec& x) { return Vec::Constant(1, 2.0 * x[0]); };
  spec.d_lower = Vec::Constant(1, -kInf);
  spec.d_upper = Vec::Constant(1, 2.0);
  const TransformedProblem tp = transform(spec);
  const AugmentedPoint z = init_augmented(tp, vec({1.0}), 1e-6);
  EXPECT_LT(z.x[0], 1.0);
  EXPECT_GE(z.x[0], 1.0 - 1e-8);
  EXPECT_LT(z.x[1], 2.0);
  EXPECT_LE(inf_norm(eval_h(tp, z)), 1e-12);
  EXPECT_EQ(code_of([&] { init_augmented(tp, vec({1.1}), 1e-6); }), Errc::infeasible_start);
}

TEST(Problem, InitAugmentedRandomTrials) {
  bench::Rng rng(5);
  ProblemSpec spec;
  spec.n = 4;
  spec.f = [](const Vec& x) { return x.sum(); };
  spec.x_lower = vec({-1.0, 0.0, -kInf, -3.0});
  spec.x_upper = vec({2.0, kInf, 5.0, kInf});
  const TransformedProblem tp = transform(spec);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec x0(4);
    x0 << -1.0 + 3.0 * rng.uniform(), 10.0 * rng.uniform(), 5.0 - 10.0 * rng.uniform(), -3.0 + 6.0 * rng.uniform();
    if (trial % 10 == 0) x0 << -1.0, 0.0, 5.0, -3.0;  // on the bounds
    const AugmentedPoint z = init_augmented(tp, x0, 1e-6);
    ASSERT_LE(inf_norm(eval_h(tp, z)), 1e-12);
  }
}

TEST(Problem, HZeroImpliesBounds) {
  // Sample y, solve h = 0 for x and check the bounds.
  const std::vector<std::pair<double, double>> boxes = {{0.0, kInf}, {-kInf, 3.0}, {-2.0, 5.0}, {-kInf, kInf}};
  for (auto [lo, hi] : boxes) {
    const TransformedProblem tp = transform(box_problem(lo, hi));
    for (double y = -10.0; y <= 10.0; y += 0.05) {
      switch (tp.kind[0]) {
        case BoundKind::line:
          break;
        case BoundKind::lower_parabola:
        case BoundKind::upper_parabola: {
          const double x = tp.t[0] - tp.s[0] * (y - tp.r[0]) * (y - tp.r[0]);
          EXPECT_NEAR(tp.h_row(0, x, y), 0.0, 1e-9);
          EXPECT_GE(x, lo);
          EXPECT_LE(x, hi);
          break;
        }
        case BoundKind::circle: {
          const double rad = tp.t[0] - (y - tp.r[0]) * (y - tp.r[0]);
          if (rad < 0) break;
          for (double sign : {-1.0, 1.0}) {
            const double x = tp.r[0] + sign * std::sqrt(rad);
            EXPECT_GE(x, lo - 1e-12);
            EXPECT_LE(x, hi + 1e-12);
          }
          break;
        }
      }
    }
  }
}

TEST(Problem, TransformIsPure) {
  ProblemSpec spec = box_problem(-1.0, 4.0);
  const TransformedProblem a = transform(spec), b = transform(spec);
  EXPECT_EQ(a.q, b.q);
  EXPECT_EQ(a.r, b.r);
  EXPECT_EQ(a.s, b.s);
  EXPECT_EQ(a.t, b.t);
}
