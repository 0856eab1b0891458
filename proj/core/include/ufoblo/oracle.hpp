// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ufoblo/core.hpp"
#include "ufoblo/estimators.hpp"

namespace ufoblo {

/// Central finite differences with per-coordinate step rel_step * max(1, |x_i|).
struct FDConfig {
  double rel_step = 1e-5;

  double step_for(double x) const;
};

using ScalarFn = std::function<double(const ParamVector&)>;
using VectorFn = std::function<ParamVector(const ParamVector&)>;

/// Central-difference gradient. Throws NonFiniteEvaluation if any probe is
/// non-finite.
ParamVector fd_grad(const ScalarFn& f, const ParamVector& phi, const FDConfig& fd = {});

/// (grad(phi + h b) - grad(phi - h b)) / (2 h) with h = rel_step * max(1, max|phi_i|).
ParamVector fd_hvp(const VectorFn& grad, const ParamVector& phi, const ParamVector& dir,
                   const FDConfig& fd = {});

struct McResult {
  ParamVector mean;
  std::vector<double> stderr_per_coord;
  /// max_i |mean_i - ref_i| / stderr_i; 0/0 counts as 0, x/0 as infinity.
  double max_abs_z;
};

/// Draws n >= 100 samples and compares their mean with reference.
McResult mc_mean_test(const std::function<ParamVector()>& sampler, const ParamVector& reference,
                      std::size_t n);

/// Expectation of the estimator's output over a finite task set, computed by
/// enumeration. For UFO the Bernoulli outcome is enumerated with weights
/// (1 - q, q) instead of sampled. Throws ProbabilityMismatch.
ParamVector enumerate_expected_grad(const BilevelProblem& problem,
                                    std::span<const WeightedTask> tasks, const ParamVector& theta,
                                    const InnerLoopConfig& cfg, const EstimatorKind& kind);

/// M(theta) for a finite task set: the weighted outer loss after the rollout.
double meta_objective(const BilevelProblem& problem, std::span<const WeightedTask> tasks,
                      const ParamVector& theta, const InnerLoopConfig& cfg);

}  // namespace ufoblo
