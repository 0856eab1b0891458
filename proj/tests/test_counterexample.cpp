// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "ufoblo/counterexample.hpp"
#include "ufoblo/errors.hpp"

using namespace ufoblo;

namespace {

// Gap |a_hat x* - b_hat| written out from the two-task averages, for a given b2.
double gap_for(double a1, double a2, double alpha, int r, double b2) {
  const double c1 = std::pow(1.0 - alpha * a1, r);
  const double c2 = std::pow(1.0 - alpha * a2, r);
  const double x_star = (b2 * c2) / (a1 * c1 + a2 * c2);
  return std::abs((a1 * c1 * c1 + a2 * c2 * c2) / 2.0 * x_star - b2 * c2 * c2 / 2.0);
}

}  // namespace

TEST(Counterexample, DeriveB2ReferenceParameters) {
  const double b2 = derive_b2(0.5, 1.5, 0.1, 10, 0.06);
  // The gap is linear in b2 (b1 = 0), so b2 = sqrt(2D) / gap(b2 = 1).
  const double oracle = std::sqrt(0.12) / gap_for(0.5, 1.5, 0.1, 10, 1.0);
  EXPECT_NEAR(b2, oracle, 1e-9 * oracle);
  // Loose check against the four-decimal reference value.
  EXPECT_NEAR(b2, 17.3954, 2e-4);
  EXPECT_GT(b2 / 1.5, -10.0);
  EXPECT_LT(b2 / 1.5, 30.0);
  EXPECT_NEAR(b2 / 1.5, 11.597, 1e-3);
}

TEST(Counterexample, DeriveB2PositiveAcrossParameters) {
  for (double a1 : {0.2, 0.5, 0.9}) {
    for (double a2 : {1.1, 1.5, 4.0}) {
      for (int r : {1, 3, 10}) {
        const double b2 = derive_b2(a1, a2, 0.2, r, 0.05);
        EXPECT_GT(b2, 0.0);
        EXPECT_NEAR(gap_for(a1, a2, 0.2, r, b2), std::sqrt(0.1), 1e-9);
      }
    }
  }
}

TEST(Counterexample, DeriveB2Errors) {
  EXPECT_THROW(derive_b2(0.5, 0.5, 0.1, 10, 0.06), DegenerateProblem);
  EXPECT_THROW(derive_b2(0.5, 11.0, 0.1, 10, 0.06), InvalidArgument);
  EXPECT_THROW(derive_b2(0.5, 1.5, 0.1, 0, 0.06), InvalidArgument);
  EXPECT_THROW(derive_b2(0.5, 1.5, 0.1, 10, 0.0), InvalidArgument);
  EXPECT_THROW(derive_b2(-0.5, 1.5, 0.1, 10, 0.06), InvalidArgument);
}

TEST(Counterexample, ConstantsReferenceParameters) {
  const auto spec = CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06);
  const auto c = counterexample_constants(spec);
  EXPECT_NEAR(c.gap * c.gap, 0.12, 1e-9 * 0.12);
  EXPECT_NEAR(c.gap, 0.34641, 1e-5);
  EXPECT_NEAR(c.x_star, 5.76, 0.01);
  EXPECT_NEAR(c.theta_star, 2.84, 0.01);
  EXPECT_NE(c.x_star, c.theta_star);

  const double c1 = std::pow(0.95, 10);
  const double c2 = std::pow(0.85, 10);
  EXPECT_NEAR(c.a_star, 0.5 * (0.5 * c1 + 1.5 * c2), 1e-15);
  EXPECT_NEAR(c.a_hat, 0.5 * (0.5 * c1 * c1 + 1.5 * c2 * c2), 1e-15);
  EXPECT_NEAR(c.x_star, spec.b2 * c2 / (0.5 * c1 + 1.5 * c2), 1e-12);
  EXPECT_NEAR(c.theta_star, spec.b2 * c2 * c2 / (0.5 * c1 * c1 + 1.5 * c2 * c2), 1e-12);

  EXPECT_TRUE(c.interval_I.contains(c.x_star));
  EXPECT_TRUE(c.interval_I.contains(c.theta_star));
  EXPECT_TRUE(c.interval_I.contains(spec.b1 / spec.a1));
  EXPECT_TRUE(c.interval_I.contains(spec.b2 / spec.a2));
  EXPECT_DOUBLE_EQ(spec.A, spec.b2 / spec.a2 + 1.0);
}

TEST(Counterexample, SymmetricDegenerateIdentity) {
  CounterexampleSpec spec{};
  spec.a1 = spec.a2 = 0.8;
  spec.b1 = spec.b2 = 2.0;
  spec.A = 5.0;
  spec.D = 0.06;
  spec.alpha = 0.1;
  spec.r = 7;
  const auto c = counterexample_constants(spec);
  EXPECT_NEAR(c.x_star, 2.5, 1e-14);
  EXPECT_NEAR(c.theta_star, 2.5, 1e-14);
  EXPECT_THROW(spec.validate(), DegenerateProblem);
}

TEST(Counterexample, ValidateRejectsBrokenSpecs) {
  auto spec = CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06);
  auto bad = spec;
  bad.b2 *= 1.01;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = spec;
  bad.A = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = spec;
  bad.b1 = 0.1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  EXPECT_THROW(spec.task_function(3), InvalidArgument);
  EXPECT_THROW(CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06, 2.0), InvalidArgument);
  EXPECT_NO_THROW(CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06, 20.0));
}

TEST(Counterexample, TaskFunctions) {
  const auto spec = CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06);
  const auto f1 = spec.task_function(1);
  const auto f2 = spec.task_function(2);
  EXPECT_EQ(f1.a, 0.5);
  EXPECT_EQ(f1.b, 0.0);
  EXPECT_EQ(f2.a, 1.5);
  EXPECT_EQ(f2.b, spec.b2);
  EXPECT_EQ(f1.A, spec.A);
}
