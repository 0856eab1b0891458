// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ufoblo/errors.hpp"

namespace ufoblo {

double InstrumentedProblem::inner_loss(const ParamVector& phi, const TaskSpec& task) const {
  return inner_.inner_loss(phi, task);
}

double InstrumentedProblem::outer_loss(const ParamVector& phi, const TaskSpec& task) const {
  return inner_.outer_loss(phi, task);
}

ParamVector InstrumentedProblem::inner_grad(const ParamVector& phi, const TaskSpec& task) const {
  ++counts_.inner_grad_evals;
  return inner_.inner_grad(phi, task);
}

ParamVector InstrumentedProblem::outer_grad(const ParamVector& phi, const TaskSpec& task) const {
  ++counts_.outer_grad_evals;
  return inner_.outer_grad(phi, task);
}

ParamVector InstrumentedProblem::inner_hvp(const ParamVector& phi, const TaskSpec& task,
                                           const ParamVector& dir) const {
  ++counts_.hvp_evals;
  return inner_.inner_hvp(phi, task, dir);
}

InnerLoopConfig::InnerLoopConfig(double alpha_, int r_) : alpha(alpha_), r(r_) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("InnerLoopConfig: alpha must be finite and >= 0");
  }
  if (r < 1) throw InvalidArgument("InnerLoopConfig: r must be >= 1");
}

RolloutResult rollout(const BilevelProblem& problem, const TaskSpec& task, const ParamVector& theta,
                      const InnerLoopConfig& cfg, bool keep_states) {
  if (theta.size() != problem.dimension(task)) {
    throw DimensionMismatch("rollout: theta has length " + std::to_string(theta.size()) +
                            ", task expects " + std::to_string(problem.dimension(task)));
  }
  std::optional<StateTrajectory> trajectory;
  if (keep_states) {
    trajectory.emplace();
    trajectory->states.reserve(static_cast<std::size_t>(cfg.r) + 1);
    trajectory->states.push_back(theta);
  }
  ParamVector phi = theta;
  for (int j = 1; j <= cfg.r; ++j) {
    try {
      phi = phi.minus_scaled(problem.inner_grad(phi, task), cfg.alpha);
    } catch (const NonFiniteState& e) {
      throw NonFiniteState("rollout: inner step " + std::to_string(j) + " of " +
                           std::to_string(cfg.r) + " diverged (" + e.what() + ")");
    }
    if (keep_states) trajectory->states.push_back(phi);
  }
  const std::size_t peak = keep_states ? trajectory->states.size() : 0;
  return RolloutResult{std::move(phi), std::move(trajectory), peak};
}

ParamVector clip_entries(const ParamVector& v, double bound) {
  if (!(bound > 0.0)) throw InvalidArgument("clip_entries: bound must be > 0");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::min(bound, std::max(-bound, v[i]));
  return ParamVector(std::move(out));
}

void validate_probabilities(std::span<const WeightedTask> tasks) {
  double total = 0.0;
  for (const auto& t : tasks) {
    if (!(t.probability >= 0.0) || !std::isfinite(t.probability)) {
      throw ProbabilityMismatch("task probabilities must be finite and non-negative");
    }
    total += t.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ProbabilityMismatch("task probabilities sum to " + std::to_string(total) + ", not 1");
  }
}

FiniteTaskDistribution::FiniteTaskDistribution(std::vector<WeightedTask> tasks)
    : tasks_(std::move(tasks)) {
  if (!tasks_.empty()) validate_probabilities(tasks_);
}

FiniteTaskDistribution FiniteTaskDistribution::equiprobable(std::vector<TaskSpec> tasks) {
  std::vector<WeightedTask> weighted;
  weighted.reserve(tasks.size());
  const double p = tasks.empty() ? 0.0 : 1.0 / static_cast<double>(tasks.size());
  for (auto& t : tasks) weighted.push_back({std::move(t), p});
  if (!weighted.empty()) {
    // Put the rounding residue on the last task so the weights sum to exactly one.
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < weighted.size(); ++i) head += weighted[i].probability;
    weighted.back().probability = 1.0 - head;
  }
  return FiniteTaskDistribution(std::move(weighted));
}

TaskSpec FiniteTaskDistribution::sample(RngStream& rng) const {
  if (tasks_.empty()) throw EmptyDistribution("FiniteTaskDistribution: no tasks to sample");
  const double u = rng.uniform01();
  double cumulative = 0.0;
  for (const auto& t : tasks_) {
    cumulative += t.probability;
    if (u < cumulative) return t.task;
  }
  // u landed in the rounding gap above the last cumulative weight.
  auto last = std::find_if(tasks_.rbegin(), tasks_.rend(),
                           [](const WeightedTask& t) { return t.probability > 0.0; });
  return last->task;
}

std::vector<TaskSpec> sample_tasks(const TaskDistribution& dist, std::size_t count, RngStream& rng) {
  if (count == 0) throw InvalidArgument("sample_tasks: count must be >= 1");
  std::vector<TaskSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(dist.sample(rng));
  return out;
}

}  // namespace ufoblo
