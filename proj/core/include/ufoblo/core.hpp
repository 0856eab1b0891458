// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ufoblo/param_vector.hpp"
#include "ufoblo/rng.hpp"
#include "ufoblo/task.hpp"

namespace ufoblo {

/// Inner/outer losses with first derivatives and an inner Hessian-vector
/// product. Implementations must be pure functions of their arguments so that
/// concurrent calls and recomputation give identical results.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual std::size_t dimension(const TaskSpec& task) const = 0;
  virtual double inner_loss(const ParamVector& phi, const TaskSpec& task) const = 0;
  virtual double outer_loss(const ParamVector& phi, const TaskSpec& task) const = 0;
  virtual ParamVector inner_grad(const ParamVector& phi, const TaskSpec& task) const = 0;
  virtual ParamVector outer_grad(const ParamVector& phi, const TaskSpec& task) const = 0;
  /// Hessian of the inner loss at phi applied to dir.
  virtual ParamVector inner_hvp(const ParamVector& phi, const TaskSpec& task,
                                const ParamVector& dir) const = 0;
};

/// Tallies of problem evaluations made while producing one result.
struct EvalCounts {
  std::size_t inner_grad_evals = 0;
  std::size_t outer_grad_evals = 0;
  std::size_t hvp_evals = 0;

  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

/// Forwards to another problem and counts every call. Not thread-safe; meant
/// to live for the duration of a single estimator call.
class InstrumentedProblem final : public BilevelProblem {
 public:
  explicit InstrumentedProblem(const BilevelProblem& inner) : inner_(inner) {}

  std::size_t dimension(const TaskSpec& task) const override { return inner_.dimension(task); }
  double inner_loss(const ParamVector& phi, const TaskSpec& task) const override;
  double outer_loss(const ParamVector& phi, const TaskSpec& task) const override;
  ParamVector inner_grad(const ParamVector& phi, const TaskSpec& task) const override;
  ParamVector outer_grad(const ParamVector& phi, const TaskSpec& task) const override;
  ParamVector inner_hvp(const ParamVector& phi, const TaskSpec& task,
                        const ParamVector& dir) const override;

  const EvalCounts& counts() const noexcept { return counts_; }

 private:
  const BilevelProblem& inner_;
  mutable EvalCounts counts_;
};

/// Step size and length of the inner gradient-descent loop.
///
/// alpha == 0 is accepted as the degenerate identity rollout; r must be >= 1.
struct InnerLoopConfig {
  double alpha;
  int r;

  InnerLoopConfig(double alpha, int r);
  friend bool operator==(const InnerLoopConfig&, const InnerLoopConfig&) = default;
};

/// Iterates phi_0 ... phi_r of one inner rollout.
struct StateTrajectory {
  std::vector<ParamVector> states;
};

struct RolloutResult {
  ParamVector final_state;
  /// Present only when the rollout was asked to keep its states.
  std::optional<StateTrajectory> trajectory;
  /// States retained besides the working iterate (r + 1 or 0).
  std::size_t peak_cached_states = 0;
};

/// r steps of phi <- phi - alpha * inner_grad(phi). Throws NonFiniteState
/// naming the first step that produced a non-finite iterate and
/// DimensionMismatch if theta does not match the task dimension.
RolloutResult rollout(const BilevelProblem& problem, const TaskSpec& task, const ParamVector& theta,
                      const InnerLoopConfig& cfg, bool keep_states);

/// Entry-wise clamp to [-bound, bound]; bound must be > 0.
ParamVector clip_entries(const ParamVector& v, double bound);

struct WeightedTask {
  TaskSpec task;
  double probability;
};

/// Source of i.i.d. tasks.
class TaskDistribution {
 public:
  virtual ~TaskDistribution() = default;
  /// Throws EmptyDistribution when there is nothing to sample.
  virtual TaskSpec sample(RngStream& rng) const = 0;
  /// Explicit support with probabilities, or nullopt for sampled families.
  virtual std::optional<std::span<const WeightedTask>> finite_support() const {
    return std::nullopt;
  }
};

/// Distribution over an explicit list of tasks. Sampling consumes one value.
class FiniteTaskDistribution final : public TaskDistribution {
 public:
  /// Throws ProbabilityMismatch if the (non-empty) probabilities are negative
  /// or do not sum to one within 1e-12.
  explicit FiniteTaskDistribution(std::vector<WeightedTask> tasks);
  static FiniteTaskDistribution equiprobable(std::vector<TaskSpec> tasks);

  TaskSpec sample(RngStream& rng) const override;
  std::optional<std::span<const WeightedTask>> finite_support() const override {
    return std::span<const WeightedTask>(tasks_);
  }
  std::size_t size() const noexcept { return tasks_.size(); }

 private:
  std::vector<WeightedTask> tasks_;
};

/// Throws ProbabilityMismatch unless the weights are non-negative and sum to one (1e-12).
void validate_probabilities(std::span<const WeightedTask> tasks);

/// count i.i.d. draws from dist using rng, in order.
std::vector<TaskSpec> sample_tasks(const TaskDistribution& dist, std::size_t count, RngStream& rng);

}  // namespace ufoblo
