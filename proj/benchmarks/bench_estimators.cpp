// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <vector>

#include "ufoblo/estimators.hpp"
#include "ufoblo/problems.hpp"
#include "ufoblo/rng.hpp"

namespace {

using namespace ufoblo;

const AnalyticProblem kProblem;

TaskSpec quadratic_task(std::size_t p) {
  std::vector<double> a(p), b(p);
  for (std::size_t d = 0; d < p; ++d) {
    a[d] = 0.5 + 0.01 * static_cast<double>(d);
    b[d] = 0.1 * static_cast<double>(d);
  }
  return TaskSpec(QuadraticTask{std::move(a), std::move(b)});
}

TaskSpec fewshot_task() {
  RngStream rng(1);
  FewShotConfig fc;
  fc.n = 16;
  fc.m = 5;
  fc.shots = 5;
  return TaskSpec(sample_fewshot_task(fc, rng));
}

template <typename Fn>
void run_estimator(benchmark::State& state, const TaskSpec& task, Fn&& fn) {
  const InnerLoopConfig cfg(0.05, static_cast<int>(state.range(0)));
  const ParamVector theta = ParamVector::filled(task.dim(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(fn(task, theta, cfg));
  state.SetComplexityN(state.range(0));
}

void BM_FoQuadratic(benchmark::State& state) {
  run_estimator(state, quadratic_task(64), [](const TaskSpec& t, const ParamVector& th, const InnerLoopConfig& c) {
    return fo_grad(kProblem, t, th, c);
  });
}

void BM_StoredQuadratic(benchmark::State& state) {
  run_estimator(state, quadratic_task(64), [](const TaskSpec& t, const ParamVector& th, const InnerLoopConfig& c) {
    return exact_grad_stored(kProblem, t, th, c);
  });
}

void BM_RerunQuadratic(benchmark::State& state) {
  run_estimator(state, quadratic_task(64), [](const TaskSpec& t, const ParamVector& th, const InnerLoopConfig& c) {
    return exact_grad_rerun(kProblem, t, th, c);
  });
}

void BM_CheckpointedQuadratic(benchmark::State& state) {
  run_estimator(state, quadratic_task(64), [](const TaskSpec& t, const ParamVector& th, const InnerLoopConfig& c) {
    return exact_grad_checkpointed(kProblem, t, th, c);
  });
}

void BM_UfoFewShot(benchmark::State& state) {
  RngStream rng(7);
  const double q = 1.0 / static_cast<double>(state.range(0));
  run_estimator(state, fewshot_task(), [&](const TaskSpec& t, const ParamVector& th, const InnerLoopConfig& c) {
    return ufo_grad(kProblem, t, th, c, q, rng, UfoOptions{true});
  });
}

void BM_StoredFewShot(benchmark::State& state) {
  run_estimator(state, fewshot_task(), [](const TaskSpec& t, const ParamVector& th, const InnerLoopConfig& c) {
    return exact_grad_stored(kProblem, t, th, c);
  });
}

BENCHMARK(BM_FoQuadratic)->RangeMultiplier(2)->Range(4, 128)->Complexity(benchmark::oN);
BENCHMARK(BM_StoredQuadratic)->RangeMultiplier(2)->Range(4, 128)->Complexity(benchmark::oN);
BENCHMARK(BM_RerunQuadratic)->RangeMultiplier(2)->Range(4, 128)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_CheckpointedQuadratic)->RangeMultiplier(2)->Range(4, 128)->Complexity(benchmark::oN);
BENCHMARK(BM_UfoFewShot)->RangeMultiplier(2)->Range(4, 64)->Complexity(benchmark::oN);
BENCHMARK(BM_StoredFewShot)->RangeMultiplier(2)->Range(4, 64)->Complexity(benchmark::oN);

}  // namespace

BENCHMARK_MAIN();
