#include "lfpsqp/types.hpp"
#include "lfpsqp/dual.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

using namespace lfpsqp;

TEST(Types, ErrorCarriesCode) {
  try {
    throw Error(Errc::retraction_diverged, "boom");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::retraction_diverged);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}

TEST(Types, ErrcNames) {
  EXPECT_STREQ(to_string(Errc::infeasible_bounds), "InfeasibleBounds");
  EXPECT_STREQ(to_string(Errc::line_search_failed), "LineSearchFailed");
  EXPECT_STREQ(to_string(Errc::coordinate_retract_failed), "CoordinateRetractFailed");
}

TEST(Types, RetractionFailureClassification) {
  EXPECT_TRUE(is_retraction_failure(Errc::retraction_diverged));
  EXPECT_TRUE(is_retraction_failure(Errc::coordinate_retract_failed));
  EXPECT_FALSE(is_retraction_failure(Errc::line_search_failed));
  EXPECT_FALSE(is_retraction_failure(Errc::non_finite_derivative));
}

TEST(Types, InfNorm) {
  EXPECT_EQ(inf_norm(Vec(0)), 0.0);
  Vec v(3);
  v << 1.0, -4.0, 2.0;
  EXPECT_EQ(inf_norm(v), 4.0);
}

TEST(Dual, ProductAndChainRule) {
  using D = Dual<double>;
  D x(2.0, 1.0);
  D y = x * x * sin(x);
  EXPECT_NEAR(y.v, 4.0 * std::sin(2.0), 1e-15);
  EXPECT_NEAR(y.d, 4.0 * std::sin(2.0) + 4.0 * std::cos(2.0), 1e-14);
  D q = exp(x) / sqrt(x);
  const double expect = std::exp(2.0) / std::sqrt(2.0) - 0.5 * std::exp(2.0) * std::pow(2.0, -1.5);
  EXPECT_NEAR(q.d, expect, 1e-13);
}

TEST(Dual, NestedGivesSecondDerivative) {
  using D = Dual<double>;
  using DD = Dual<D>;
  DD x(D(1.5, 1.0), D(1.0, 0.0));
  DD y = x * x * x;  // y'' = 6x
  EXPECT_NEAR(y.d.d, 9.0, 1e-14);
}
