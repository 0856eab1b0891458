// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "ufoblo/errors.hpp"
#include "ufoblo/estimators.hpp"
#include "ufoblo/oracle.hpp"
#include "ufoblo/problems.hpp"

using namespace ufoblo;

namespace {

const AnalyticProblem kProblem;

TaskSpec quadratic(std::vector<double> a, std::vector<double> b) {
  return TaskSpec(QuadraticTask{std::move(a), std::move(b)});
}

CounterexampleSpec reference_spec() { return CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06); }

}  // namespace

TEST(FoGrad, QuadraticClosedForm) {
  const auto est = fo_grad(kProblem, quadratic({0.5}, {0.0}), ParamVector{1.0}, InnerLoopConfig(0.1, 10));
  EXPECT_NEAR(est.gradient[0], 0.5 * std::pow(0.95, 10), 1e-15);
  EXPECT_NEAR(est.gradient[0], 0.2993685, 1e-7);
  EXPECT_EQ(est.meta.inner_grad_evals, 10u);
  EXPECT_EQ(est.meta.outer_grad_evals, 1u);
  EXPECT_EQ(est.meta.hvp_evals, 0u);
  EXPECT_FALSE(est.meta.correction_taken.has_value());
}

TEST(FoGrad, ZeroStepAndInnerMinimum) {
  const TaskSpec task = quadratic({0.5, 2.0}, {1.0, -1.0});
  const ParamVector theta{0.3, 0.9};
  const InnerLoopConfig identity(0.0, 5);
  EXPECT_EQ(fo_grad(kProblem, task, theta, identity).gradient, kProblem.outer_grad(theta, task));
  EXPECT_EQ(fo_grad(kProblem, task, theta, identity).gradient,
            exact_grad_stored(kProblem, task, theta, identity).gradient);
  EXPECT_EQ(fo_grad(kProblem, task, ParamVector{2.0, -0.5}, InnerLoopConfig(0.1, 4)).gradient.max_abs(), 0.0);
}

TEST(ExactGrad, QuadraticClosedForm) {
  const auto est = exact_grad_stored(kProblem, quadratic({0.5}, {0.0}), ParamVector{1.0}, InnerLoopConfig(0.1, 10));
  EXPECT_NEAR(est.gradient[0], 0.5 * std::pow(0.95, 20), 1e-15);
  EXPECT_NEAR(est.gradient[0], 0.1792430, 1e-7);
  EXPECT_EQ(est.meta.peak_cached_states, 10u);
  EXPECT_EQ(est.meta.inner_grad_evals, 10u);
  EXPECT_EQ(est.meta.hvp_evals, 10u);
}

TEST(ExactGrad, ZeroHessianMatchesFo) {
  // Far outside the quadratic segment the counterexample loss is linear.
  const auto spec = reference_spec();
  const TaskSpec task(CounterexampleTask{spec, 1, 1});
  const InnerLoopConfig cfg(spec.alpha, spec.r);
  const ParamVector theta{spec.A + 50.0};
  EXPECT_EQ(exact_grad_stored(kProblem, task, theta, cfg).gradient, fo_grad(kProblem, task, theta, cfg).gradient);
}

TEST(ExactGrad, CounterexampleInsideSegment) {
  const auto spec = reference_spec();
  const auto consts = counterexample_constants(spec);
  const InnerLoopConfig cfg(spec.alpha, spec.r);
  for (double theta : {consts.interval_I.lo + 0.1, 0.0, 3.0, 7.5, consts.interval_I.hi - 0.1}) {
    for (int i : {1, 2}) {
      const TaskSpec task(CounterexampleTask{spec, i, 1});
      const double a = i == 1 ? spec.a1 : spec.a2;
      const double b = i == 1 ? spec.b1 : spec.b2;
      const double want = a * std::pow(1.0 - spec.alpha * a, 2 * spec.r) * (theta - b / a);
      EXPECT_NEAR(exact_grad_stored(kProblem, task, ParamVector{theta}, cfg).gradient[0], want, 1e-12);
      const double want_fo = a * std::pow(1.0 - spec.alpha * a, spec.r) * (theta - b / a);
      EXPECT_NEAR(fo_grad(kProblem, task, ParamVector{theta}, cfg).gradient[0], want_fo, 1e-12);
    }
  }
}

TEST(ExactGrad, RerunCountsAndEquality) {
  const TaskSpec task = quadratic({0.5, 1.3}, {0.2, -0.4});
  const ParamVector theta{1.0, -2.0};
  const auto r1 = exact_grad_rerun(kProblem, task, theta, InnerLoopConfig(0.1, 1));
  EXPECT_EQ(r1.meta.inner_grad_evals, 1u);
  EXPECT_EQ(r1.meta.hvp_evals, 1u);
  const auto r10 = exact_grad_rerun(kProblem, task, theta, InnerLoopConfig(0.1, 10));
  EXPECT_EQ(r10.meta.inner_grad_evals, 55u);
  EXPECT_EQ(r10.meta.hvp_evals, 10u);
  EXPECT_EQ(r10.meta.outer_grad_evals, 1u);
  EXPECT_LE(r10.meta.peak_cached_states, 3u);
  EXPECT_EQ(r10.gradient, exact_grad_stored(kProblem, task, theta, InnerLoopConfig(0.1, 10)).gradient);
}

TEST(ExactGrad, CheckpointSchedules) {
  const auto spec = reference_spec();
  const TaskSpec task(CounterexampleTask{spec, 2, 2});
  const ParamVector theta{-4.0, 1.0};
  for (int r : {1, 2, 7, 16, 20}) {
    const InnerLoopConfig cfg(spec.alpha, r);
    const ParamVector want = exact_grad_stored(kProblem, task, theta, cfg).gradient;
    for (std::size_t k = 1; k <= static_cast<std::size_t>(r); ++k) {
      const auto est = exact_grad_checkpointed(kProblem, task, theta, cfg, k);
      EXPECT_EQ(est.gradient, want) << "r=" << r << " K=" << k;
      EXPECT_EQ(est.meta.inner_grad_evals, 2u * static_cast<std::size_t>(r) - k);
      EXPECT_EQ(est.meta.hvp_evals, static_cast<std::size_t>(r));
    }
    EXPECT_EQ(exact_grad_checkpointed(kProblem, task, theta, cfg, static_cast<std::size_t>(r)).meta.peak_cached_states,
              static_cast<std::size_t>(r));
    EXPECT_EQ(exact_grad_checkpointed(kProblem, task, theta, cfg, 1).meta.peak_cached_states,
              static_cast<std::size_t>(r));
    EXPECT_THROW(exact_grad_checkpointed(kProblem, task, theta, cfg, static_cast<std::size_t>(r) + 1),
                 InvalidCheckpointCount);
  }
  const auto est16 = exact_grad_checkpointed(kProblem, task, theta, InnerLoopConfig(0.1, 16), 4);
  EXPECT_LE(est16.meta.peak_cached_states, 4u + 4u + 1u);
  EXPECT_LE(est16.meta.inner_grad_evals, 32u);
  EXPECT_EQ(default_checkpoint_count(16), 4u);
  EXPECT_EQ(default_checkpoint_count(10), 4u);
  EXPECT_EQ(default_checkpoint_count(1), 1u);
}

TEST(UfoGrad, QEqualsOneIsExact) {
  const auto spec = reference_spec();
  const TaskSpec task(CounterexampleTask{spec, 1, 1});
  const InnerLoopConfig cfg(spec.alpha, spec.r);
  RngStream rng(3);
  for (double theta : {-20.0, 0.5, 6.0, 14.0, 40.0}) {
    const auto est = ufo_grad(kProblem, task, ParamVector{theta}, cfg, 1.0, rng);
    EXPECT_EQ(est.gradient, exact_grad_rerun(kProblem, task, ParamVector{theta}, cfg).gradient);
    EXPECT_EQ(est.meta.correction_taken, true);
  }
}

TEST(UfoGrad, HalfProbabilityOutcomes) {
  const TaskSpec task = quadratic({0.5}, {0.0});
  const InnerLoopConfig cfg(0.1, 10);
  const double fo = 0.5 * std::pow(0.95, 10);
  const double exact = 0.5 * std::pow(0.95, 20);
  RngStream rng(8);
  std::size_t corrected = 0;
  for (int i = 0; i < 200; ++i) {
    const auto est = ufo_grad(kProblem, task, ParamVector{1.0}, cfg, 0.5, rng);
    ASSERT_TRUE(est.meta.correction_taken.has_value());
    if (*est.meta.correction_taken) {
      ++corrected;
      EXPECT_NEAR(est.gradient[0], fo + 2.0 * (exact - fo), 1e-14);
      EXPECT_NEAR(est.gradient[0], 0.0591175, 1e-7);
      EXPECT_EQ(est.meta.inner_grad_evals, 10u + 55u);
    } else {
      EXPECT_NEAR(est.gradient[0], fo, 1e-15);
      EXPECT_EQ(est.meta.inner_grad_evals, 10u);
    }
  }
  EXPECT_GT(corrected, 50u);
  EXPECT_LT(corrected, 150u);
  EXPECT_NEAR(0.5 * fo + 0.5 * (fo + 2.0 * (exact - fo)), exact, 1e-15);
}

TEST(UfoGrad, MonteCarloMeanMatchesExact) {
  const auto spec = reference_spec();
  const TaskSpec task(CounterexampleTask{spec, 2, 1});
  const InnerLoopConfig cfg(spec.alpha, spec.r);
  const ParamVector theta{5.0};
  RngStream rng(12345);
  const auto res = mc_mean_test([&] { return ufo_grad(kProblem, task, theta, cfg, 0.1, rng, {true}).gradient; },
                                exact_grad_stored(kProblem, task, theta, cfg).gradient, 100000);
  EXPECT_LT(res.max_abs_z, 4.0);
}

TEST(UfoGrad, FusedMatchesPlainGradient) {
  const auto spec = reference_spec();
  const TaskSpec task(CounterexampleTask{spec, 2, 1});
  const InnerLoopConfig cfg(spec.alpha, spec.r);
  for (std::uint64_t s = 0; s < 50; ++s) {
    RngStream a(s);
    RngStream b(s);
    const ParamVector theta{static_cast<double>(s) - 10.0};
    const auto plain = ufo_grad(kProblem, task, theta, cfg, 0.3, a);
    const auto fused = ufo_grad(kProblem, task, theta, cfg, 0.3, b, {true});
    EXPECT_EQ(plain.gradient, fused.gradient);
    EXPECT_EQ(plain.meta.correction_taken, fused.meta.correction_taken);
    if (*fused.meta.correction_taken) EXPECT_EQ(fused.meta.inner_grad_evals, 10u + 45u);
  }
}

TEST(UfoGrad, Errors) {
  const TaskSpec task = quadratic({0.5}, {0.0});
  RngStream rng(1);
  EXPECT_THROW(ufo_grad(kProblem, task, ParamVector{1.0}, InnerLoopConfig(0.1, 2), 0.0, rng), InvalidArgument);
  EXPECT_THROW(ufo_grad(kProblem, task, ParamVector{1.0}, InnerLoopConfig(0.1, 2), 1.5, rng), InvalidArgument);
  EXPECT_THROW(EstimatorKind::ufo(0.0), InvalidArgument);
  EXPECT_THROW(fo_grad(kProblem, task, ParamVector{1.0, 2.0}, InnerLoopConfig(0.1, 2)), DimensionMismatch);
}

TEST(UfoCombine, Identity) {
  const ParamVector fo{1.0, -2.0};
  const ParamVector exact{0.5, 3.0};
  EXPECT_EQ(ufo_combine(fo, exact, 0.25, false), fo);
  const ParamVector c = ufo_combine(fo, exact, 0.25, true);
  EXPECT_NEAR(c[0], 1.0 + 4.0 * (0.5 - 1.0), 1e-15);
  EXPECT_NEAR(c[1], -2.0 + 4.0 * (3.0 + 2.0), 1e-14);
  EXPECT_EQ(ufo_combine(fo, exact, 1.0, true), exact);
}

TEST(EstimatorKind, NamesRoundTrip) {
  for (const auto& kind : {EstimatorKind::fo(), EstimatorKind::exact_stored(), EstimatorKind::exact_rerun(),
                           EstimatorKind::exact_checkpointed(), EstimatorKind::ufo(0.3)}) {
    EXPECT_EQ(EstimatorKind::parse(kind.name(), kind.q), kind);
  }
  EXPECT_EQ(EstimatorKind::parse("exact"), EstimatorKind::exact_stored());
  EXPECT_THROW(EstimatorKind::parse("maml"), InvalidArgument);
  EXPECT_TRUE(EstimatorKind::exact_rerun().is_exact());
  EXPECT_FALSE(EstimatorKind::ufo(0.5).is_exact());
}

TEST(EstimateGradient, DispatchesAndSetsCorrectionFlag) {
  const TaskSpec task = quadratic({0.5}, {0.0});
  const InnerLoopConfig cfg(0.1, 4);
  RngStream rng(5);
  for (const auto& kind : {EstimatorKind::fo(), EstimatorKind::exact_stored(), EstimatorKind::exact_rerun(),
                           EstimatorKind::exact_checkpointed(), EstimatorKind::ufo(0.5)}) {
    const auto est = estimate_gradient(kProblem, task, ParamVector{1.0}, cfg, kind, rng);
    EXPECT_EQ(est.meta.correction_taken.has_value(), kind.type == EstimatorKind::Type::kUFO);
  }
}
