// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "ufoblo/diagnostics.hpp"
#include "ufoblo/errors.hpp"
#include "ufoblo/outer_loop.hpp"
#include "ufoblo/problems.hpp"

using namespace ufoblo;

namespace {

const AnalyticProblem kProblem;

FiniteTaskDistribution single_quadratic(double a, double b) {
  return FiniteTaskDistribution::equiprobable({TaskSpec(QuadraticTask{{a}, {b}})});
}

}  // namespace

TEST(StepSchedule, Values) {
  EXPECT_EQ(StepSchedule::constant(0.1).gamma(7), 0.1);
  EXPECT_EQ(StepSchedule::harmonic(10.0).gamma(4), 2.5);
  EXPECT_EQ(StepSchedule::inverse_sqrt().gamma(16), 0.25);
  EXPECT_THROW(StepSchedule::harmonic(1.0).gamma(0), InvalidArgument);
  EXPECT_THROW(StepSchedule::constant(0.0), InvalidArgument);
  EXPECT_THROW(StepSchedule::harmonic(-1.0), InvalidArgument);
}

TEST(StepSchedule, Parse) {
  EXPECT_EQ(StepSchedule::parse("harmonic:10"), StepSchedule::harmonic(10.0));
  EXPECT_EQ(StepSchedule::parse("constant:0.5"), StepSchedule::constant(0.5));
  EXPECT_EQ(StepSchedule::parse("inverse-sqrt"), StepSchedule::inverse_sqrt());
  EXPECT_THROW(StepSchedule::parse("cosine:1"), InvalidArgument);
  EXPECT_THROW(StepSchedule::parse("harmonic:x"), InvalidArgument);
  EXPECT_THROW(StepSchedule::parse("harmonic"), InvalidArgument);
}

TEST(StepSchedule, Classification) {
  const auto h = validate_schedule(StepSchedule::harmonic(10.0));
  EXPECT_TRUE(h.divergent_and_vanishing);
  EXPECT_TRUE(h.square_summable);
  const auto s = validate_schedule(StepSchedule::inverse_sqrt());
  EXPECT_TRUE(s.divergent_and_vanishing);
  EXPECT_FALSE(s.square_summable);
  const auto c = validate_schedule(StepSchedule::constant(0.1));
  EXPECT_FALSE(c.divergent_and_vanishing);
  EXPECT_FALSE(c.square_summable);
}

TEST(RunMinibatchGd, SingleStepByHand) {
  RunConfig cfg;
  cfg.tau = 1;
  cfg.estimator = EstimatorKind::exact_stored();
  cfg.schedule = StepSchedule::constant(0.3);
  cfg.theta0 = ParamVector{2.0};
  cfg.inner = InnerLoopConfig(0.1, 10);
  const auto traj = run_minibatch_gd(kProblem, single_quadratic(0.5, 0.0), cfg);
  ASSERT_EQ(traj.iterates.size(), 2u);
  const double g = 0.5 * std::pow(0.95, 20) * 2.0;
  EXPECT_NEAR(traj.iterates[1].theta[0], 2.0 - 0.3 * g, 1e-15);
  EXPECT_NEAR(*traj.iterates[1].grad_m_norm, 0.5 * std::pow(0.95, 20) * std::abs(2.0 - 0.3 * g), 1e-15);
  EXPECT_EQ(traj.iterates[1].gamma, 0.3);
  EXPECT_FALSE(traj.failed);
}

TEST(RunMinibatchGd, ReplayIsBitwise) {
  const auto spec = CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06);
  RunConfig cfg;
  cfg.tau = 300;
  cfg.v = 3;
  cfg.estimator = EstimatorKind::ufo(0.2);
  cfg.schedule = StepSchedule::harmonic(10.0);
  cfg.theta0 = UniformInit{-10.0, 30.0, 1};
  cfg.inner = InnerLoopConfig(spec.alpha, spec.r);
  cfg.seed = 4;
  const auto dist = counterexample_distribution(spec);
  const auto a = run_minibatch_gd(kProblem, dist, cfg);
  const auto b = run_minibatch_gd(kProblem, dist, cfg);
  ASSERT_EQ(a.iterates.size(), 301u);
  for (std::size_t k = 0; k < a.iterates.size(); ++k) {
    EXPECT_EQ(a.iterates[k].theta, b.iterates[k].theta);
    EXPECT_EQ(a.iterates[k].corrections, b.iterates[k].corrections);
  }
  cfg.seed = 5;
  const auto c = run_minibatch_gd(kProblem, dist, cfg);
  EXPECT_NE(a.iterates[0].theta, c.iterates[0].theta);
  EXPECT_GE(a.iterates[0].theta[0], -10.0);
  EXPECT_LT(a.iterates[0].theta[0], 30.0);
}

TEST(RunMinibatchGd, IdenticalBatchEqualsSingleTask) {
  RunConfig cfg;
  cfg.tau = 20;
  cfg.estimator = EstimatorKind::exact_rerun();
  cfg.schedule = StepSchedule::constant(0.5);
  cfg.theta0 = ParamVector{3.0};
  cfg.inner = InnerLoopConfig(0.2, 5);
  const auto dist = single_quadratic(1.3, 0.4);
  const auto one = run_minibatch_gd(kProblem, dist, cfg);
  cfg.v = 5;
  const auto five = run_minibatch_gd(kProblem, dist, cfg);
  for (std::size_t k = 0; k < one.iterates.size(); ++k) {
    EXPECT_NEAR(one.iterates[k].theta[0], five.iterates[k].theta[0], 1e-14);
  }
  EXPECT_EQ(five.iterates[1].evals.inner_grad_evals, 5u * 15u);
}

TEST(RunMinibatchGd, ExactGdOnQuadraticIsMonotone) {
  RunConfig cfg;
  cfg.tau = 200;
  cfg.estimator = EstimatorKind::exact_stored();
  cfg.schedule = StepSchedule::constant(0.5);
  cfg.theta0 = ParamVector{-8.0};
  cfg.inner = InnerLoopConfig(0.1, 5);
  cfg.theta0 = ParamVector{-8.0, 5.0};
  const auto dist =
      FiniteTaskDistribution::equiprobable({TaskSpec(QuadraticTask{{1.0, 2.0}, {0.5, -1.0}})});
  const auto traj = run_minibatch_gd(kProblem, dist, cfg);
  for (std::size_t k = 1; k < traj.iterates.size(); ++k) {
    EXPECT_LE(*traj.iterates[k].grad_m_norm, *traj.iterates[k - 1].grad_m_norm);
  }
}

TEST(RunMinibatchGd, ClippingBoundsTheUpdate) {
  RunConfig cfg;
  cfg.tau = 5;
  cfg.estimator = EstimatorKind::fo();
  cfg.schedule = StepSchedule::constant(1.0);
  cfg.clip_bound = 0.1;
  cfg.theta0 = ParamVector{100.0, -100.0};
  cfg.inner = InnerLoopConfig(0.1, 2);
  const auto dist = FiniteTaskDistribution::equiprobable({TaskSpec(QuadraticTask{{1.0, 1.0}, {0.0, 0.0}})});
  const auto traj = run_minibatch_gd(kProblem, dist, cfg);
  for (std::size_t k = 1; k < traj.iterates.size(); ++k) {
    EXPECT_LE(traj.iterates[k].batch_gradient->max_abs(), 0.1);
    EXPECT_NEAR((traj.iterates[k - 1].theta - traj.iterates[k].theta).max_abs(), 0.1, 1e-12);
  }
}

TEST(RunMinibatchGd, DivergenceReturnsPartialTrajectory) {
  RunConfig cfg;
  cfg.tau = 50;
  cfg.estimator = EstimatorKind::exact_stored();
  cfg.schedule = StepSchedule::constant(1e150);
  cfg.theta0 = ParamVector{1.0};
  cfg.inner = InnerLoopConfig(0.1, 1);
  cfg.monitor.every = 0;
  const auto traj = run_minibatch_gd(kProblem, single_quadratic(1.0, 0.0), cfg);
  EXPECT_TRUE(traj.failed);
  EXPECT_LT(traj.iterates.size(), 51u);
  EXPECT_FALSE(traj.failure.empty());
}

TEST(RunMinibatchGd, MonteCarloMonitorOnSampledTasks) {
  FewShotConfig fc;
  const FewShotTaskDistribution dist(fc);
  RunConfig cfg;
  cfg.tau = 10;
  cfg.v = 2;
  cfg.estimator = EstimatorKind::ufo(0.5);
  cfg.schedule = StepSchedule::constant(0.1);
  cfg.theta0 = UniformInit{-0.1, 0.1, fc.n * fc.m};
  cfg.inner = InnerLoopConfig(0.5, 3);
  cfg.monitor = MonitorPolicy{5, 8};
  const auto traj = run_minibatch_gd(kProblem, dist, cfg);
  ASSERT_EQ(traj.iterates.size(), 11u);
  for (const auto& it : traj.iterates) {
    EXPECT_EQ(it.grad_m_norm.has_value(), it.k % 5 == 0);
    if (it.grad_m_norm) EXPECT_TRUE(it.grad_m_estimated);
  }
}

TEST(RunConfig, Validation) {
  RunConfig cfg;
  cfg.tau = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.tau = 1;
  cfg.v = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.v = 1;
  cfg.clip_bound = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.clip_bound.reset();
  cfg.theta0 = UniformInit{1.0, 0.0, 1};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}
