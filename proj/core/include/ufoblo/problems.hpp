// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "ufoblo/core.hpp"

namespace ufoblo {

/// Closed-form losses, gradients and HVPs for every built-in task family.
///
/// Quadratic tasks use the same loss inside and outside. Counterexample
/// tasks apply their piecewise function to phi[0] and ignore the remaining
/// coordinates. Few-shot tasks use the train split inside and the test split
/// outside.
class AnalyticProblem final : public BilevelProblem {
 public:
  std::size_t dimension(const TaskSpec& task) const override { return task.dim(); }
  double inner_loss(const ParamVector& phi, const TaskSpec& task) const override;
  double outer_loss(const ParamVector& phi, const TaskSpec& task) const override;
  ParamVector inner_grad(const ParamVector& phi, const TaskSpec& task) const override;
  ParamVector outer_grad(const ParamVector& phi, const TaskSpec& task) const override;
  ParamVector inner_hvp(const ParamVector& phi, const TaskSpec& task,
                        const ParamVector& dir) const override;
};

/// The two equiprobable counterexample tasks embedded in R^dim.
FiniteTaskDistribution counterexample_distribution(const CounterexampleSpec& spec,
                                                   std::size_t dim = 1);

/// Draws a fresh synthetic few-shot task on every call.
class FewShotTaskDistribution final : public TaskDistribution {
 public:
  explicit FewShotTaskDistribution(FewShotConfig config);
  TaskSpec sample(RngStream& rng) const override;
  const FewShotConfig& config() const noexcept { return config_; }

 private:
  FewShotConfig config_;
};

}  // namespace ufoblo
