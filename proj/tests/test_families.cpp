// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ufoblo/errors.hpp"
#include "ufoblo/logistic.hpp"
#include "ufoblo/oracle.hpp"
#include "ufoblo/problems.hpp"
#include "ufoblo/quadratic.hpp"
#include "ufoblo/task.hpp"

using namespace ufoblo;

namespace {

FewShotLogisticTask small_task(std::uint64_t seed) {
  RngStream rng(seed);
  FewShotConfig cfg;
  cfg.n = 3;
  cfg.m = 4;
  cfg.shots = 2;
  cfg.test_per_class = 2;
  return sample_fewshot_task(cfg, rng);
}

ParamVector random_vector(RngStream& rng, std::size_t dim, double scale) {
  std::vector<double> v(dim);
  for (double& x : v) x = scale * rng.normal();
  return ParamVector(std::move(v));
}

}  // namespace

TEST(Quadratic, LossGradHvp) {
  const QuadraticTask t{{0.5, 2.0}, {1.0, -1.0}};
  const ParamVector phi{3.0, 0.5};
  EXPECT_DOUBLE_EQ(t.loss(phi), 0.25 * std::pow(3.0 - 2.0, 2) + 1.0 * std::pow(0.5 + 0.5, 2));
  EXPECT_EQ(t.grad(phi), (ParamVector{0.5 * 3.0 - 1.0, 2.0 * 0.5 + 1.0}));
  EXPECT_EQ(t.hvp(ParamVector{1.0, -2.0}), (ParamVector{0.5, -4.0}));
  EXPECT_EQ(t.grad(ParamVector{2.0, -0.5}), (ParamVector{0.0, 0.0}));
}

TEST(Quadratic, Validation) {
  EXPECT_THROW((QuadraticTask{{}, {}}.validate()), InvalidArgument);
  EXPECT_THROW((QuadraticTask{{1.0}, {1.0, 2.0}}.validate()), InvalidArgument);
  EXPECT_THROW((QuadraticTask{{0.0}, {1.0}}.validate()), InvalidArgument);
  EXPECT_THROW((QuadraticTask{{-1.0}, {1.0}}.validate()), InvalidArgument);
  EXPECT_THROW(TaskSpec(QuadraticTask{{-1.0}, {1.0}}), InvalidArgument);
}

TEST(Logistic, CceExamples) {
  const std::vector<double> z0{0.0, 0.0};
  const std::vector<double> y0{1.0, 0.0};
  EXPECT_NEAR(cce_loss(z0, y0), std::log(2.0), 1e-15);
  const std::vector<double> z1{1.0, 2.0, 3.0};
  const std::vector<double> y1{0.0, 0.0, 1.0};
  EXPECT_NEAR(cce_loss(z1, y1), std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 3.0, 1e-14);
  EXPECT_NEAR(cce_loss(z1, y1), 0.40761, 1e-5);
  const std::vector<double> z2{800.0, 0.0, 0.0};
  const std::vector<double> y2{1.0, 0.0, 0.0};
  EXPECT_LT(cce_loss(z2, y2), 1e-300);
  EXPECT_TRUE(std::isfinite(cce_loss(z2, y1)));
}

TEST(Logistic, GradientAtZeroIsMeanOfResidualOuterProducts) {
  const auto task = small_task(1);
  const ParamVector zero(task.dim());
  const ParamVector g = logistic_inner_grad(zero, task);
  const std::size_t count = task.train_size();
  std::vector<double> want(task.dim(), 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t c = 0; c < task.m; ++c) {
      const double residual = 1.0 / static_cast<double>(task.m) - task.train.labels[i * task.m + c];
      for (std::size_t d = 0; d < task.n; ++d) {
        want[c * task.n + d] += residual * task.train.inputs[i * task.n + d] / static_cast<double>(count);
      }
    }
  }
  for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(g[k], want[k], 1e-14);
}

TEST(Logistic, GradientsMatchFiniteDifferences) {
  RngStream rng(5);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto task = small_task(100 + s);
    const ParamVector phi = random_vector(rng, task.dim(), 0.7);
    for (Split split : {Split::kTrain, Split::kTest}) {
      const ParamVector fd =
          fd_grad([&](const ParamVector& p) { return logistic_loss(p, task, split); }, phi);
      const ParamVector g = logistic_grad(phi, task, split);
      EXPECT_LT((g - fd).norm() / std::max(g.norm(), 1e-3), 1e-6);
    }
  }
}

TEST(Logistic, HvpMatchesFiniteDifferencesAndIsPsd) {
  RngStream rng(6);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto task = small_task(200 + s);
    const ParamVector phi = random_vector(rng, task.dim(), 0.7);
    const ParamVector b = random_vector(rng, task.dim(), 1.0);
    const ParamVector hv = logistic_inner_hvp(phi, task, b);
    const ParamVector fd =
        fd_hvp([&](const ParamVector& p) { return logistic_inner_grad(p, task); }, phi, b);
    EXPECT_LT((hv - fd).norm() / std::max(hv.norm(), 1e-3), 1e-6);
    EXPECT_GE(b.dot(hv), -1e-14);
    EXPECT_EQ(logistic_inner_hvp(phi, task, ParamVector(task.dim())).max_abs(), 0.0);
  }
}

TEST(Logistic, SampledTasksAreWellFormed) {
  RngStream rng(8);
  FewShotConfig cfg;
  const auto task = sample_fewshot_task(cfg, rng);
  EXPECT_EQ(task.dim(), cfg.n * cfg.m);
  EXPECT_EQ(task.train_size(), cfg.shots * cfg.m);
  EXPECT_EQ(task.test_size(), cfg.test_per_class * cfg.m);
  for (std::size_t i = 0; i < task.train_size(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < task.m; ++c) sum += task.train.labels[i * task.m + c];
    EXPECT_EQ(sum, 1.0);
  }
  FewShotLogisticTask bad = task;
  bad.train.labels[0] = 0.5;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = task;
  bad.train.inputs.pop_back();
  EXPECT_THROW(bad.validate(), InvalidArgument);
  FewShotConfig zero_shots;
  zero_shots.shots = 0;
  EXPECT_THROW(zero_shots.validate(), InvalidArgument);
}

TEST(TaskSpec, FamilyAndDimension) {
  const TaskSpec q(QuadraticTask{{1.0, 2.0, 3.0}, {0.0, 0.0, 0.0}});
  EXPECT_EQ(q.family(), TaskFamily::kQuadratic);
  EXPECT_EQ(q.dim(), 3u);
  const auto spec = CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06);
  const TaskSpec c(CounterexampleTask{spec, 2, 4});
  EXPECT_EQ(c.family(), TaskFamily::kCounterexample);
  EXPECT_EQ(c.dim(), 4u);
  EXPECT_THROW(TaskSpec(CounterexampleTask{spec, 0, 1}), InvalidArgument);
  EXPECT_THROW(TaskSpec(CounterexampleTask{spec, 1, 0}), InvalidArgument);
  const TaskSpec f(small_task(3));
  EXPECT_EQ(f.family(), TaskFamily::kFewShotLogistic);
  EXPECT_EQ(f.dim(), 12u);
  EXPECT_EQ(to_string(TaskFamily::kCounterexample), "counterexample");
}

TEST(AnalyticProblem, CounterexampleActsOnFirstCoordinate) {
  const auto spec = CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06);
  const TaskSpec task(CounterexampleTask{spec, 2, 3});
  const AnalyticProblem problem;
  const ParamVector phi{4.0, -7.0, 100.0};
  const auto f = spec.task_function(2);
  EXPECT_EQ(problem.inner_loss(phi, task), piecewise_value(4.0, f));
  EXPECT_EQ(problem.outer_loss(phi, task), piecewise_value(4.0, f));
  EXPECT_EQ(problem.inner_grad(phi, task), (ParamVector{piecewise_grad(4.0, f), 0.0, 0.0}));
  EXPECT_EQ(problem.inner_hvp(phi, task, ParamVector{2.0, 1.0, 1.0}),
            (ParamVector{2.0 * piecewise_hess(4.0, f), 0.0, 0.0}));
  EXPECT_THROW(problem.inner_grad(ParamVector{1.0}, task), DimensionMismatch);
}

TEST(AnalyticProblem, FewShotUsesTrainInsideTestOutside) {
  const auto t = small_task(4);
  const TaskSpec task(t);
  const AnalyticProblem problem;
  RngStream rng(2);
  const ParamVector phi = random_vector(rng, t.dim(), 0.5);
  EXPECT_EQ(problem.inner_loss(phi, task), logistic_loss(phi, t, Split::kTrain));
  EXPECT_EQ(problem.outer_loss(phi, task), logistic_loss(phi, t, Split::kTest));
  EXPECT_EQ(problem.outer_grad(phi, task), logistic_outer_grad(phi, t));
}

TEST(Distributions, CounterexampleDistributionIsEquiprobable) {
  const auto spec = CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06);
  const auto dist = counterexample_distribution(spec);
  const auto support = *dist.finite_support();
  ASSERT_EQ(support.size(), 2u);
  EXPECT_EQ(support[0].probability, 0.5);
  EXPECT_EQ(support[1].probability, 0.5);
  EXPECT_EQ(std::get<CounterexampleTask>(support[0].task.payload()).index, 1);
  EXPECT_EQ(std::get<CounterexampleTask>(support[1].task.payload()).index, 2);
}

TEST(Distributions, FewShotDistributionIsSeeded) {
  const FewShotTaskDistribution dist(FewShotConfig{});
  RngStream a(10);
  RngStream b(10);
  EXPECT_EQ(dist.sample(a), dist.sample(b));
  EXPECT_FALSE(dist.finite_support().has_value());
}
