// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ufoblo/core.hpp"
#include "ufoblo/estimators.hpp"

namespace ufoblo {

/// Outer-loop step sizes gamma_k, k >= 1.
struct StepSchedule {
  enum class Kind { kConstant, kHarmonic, kInverseSqrt };

  Kind kind = Kind::kHarmonic;
  double value = 1.0;  ///< gamma for Constant, c for Harmonic (gamma_k = c / k); unused otherwise

  static StepSchedule constant(double gamma);
  static StepSchedule harmonic(double c);
  static StepSchedule inverse_sqrt() { return {Kind::kInverseSqrt, 1.0}; }

  double gamma(std::size_t k) const;
  std::string describe() const;
  /// "constant:G", "harmonic:C" or "inverse-sqrt".
  static StepSchedule parse(const std::string& text);

  friend bool operator==(const StepSchedule&, const StepSchedule&) = default;
};

struct ScheduleReport {
  bool divergent_and_vanishing;    ///< sum gamma_k = inf and gamma_k -> 0
  bool square_summable;  ///< sum gamma_k^2 < inf
};

/// Analytic classification by schedule kind.
ScheduleReport validate_schedule(const StepSchedule& schedule);

/// theta_0 ~ U[lo, hi]^dim, drawn from the run's initial-theta substream.
struct UniformInit {
  double lo;
  double hi;
  std::size_t dim = 1;
};

/// How the exact meta-gradient norm is tracked along the trajectory.
struct MonitorPolicy {
  /// Record every this many iterations (0 disables). Finite task
  /// distributions are evaluated exactly.
  std::size_t every = 1;
  /// Tasks averaged for the Monte-Carlo estimate on sampled distributions.
  std::size_t mc_tasks = 64;
};

struct RunConfig {
  std::size_t tau = 1;
  std::size_t v = 1;
  EstimatorKind estimator = EstimatorKind::fo();
  StepSchedule schedule = StepSchedule::harmonic(1.0);
  std::optional<double> clip_bound;
  std::uint64_t seed = 0;
  std::variant<ParamVector, UniformInit> theta0 = UniformInit{-1.0, 1.0, 1};
  InnerLoopConfig inner{0.1, 1};
  UfoOptions ufo_options;
  MonitorPolicy monitor;

  /// Throws InvalidArgument for tau == 0, v == 0 or a non-positive clip bound.
  void validate() const;
};

struct IterateRecord {
  std::size_t k = 0;
  ParamVector theta{1};
  double gamma = 0.0;  ///< 0 for k = 0
  /// Averaged (and clipped, if enabled) batch gradient that produced theta; empty for k = 0.
  std::optional<ParamVector> batch_gradient;
  /// Meta-gradient norm at theta when monitored.
  std::optional<double> grad_m_norm;
  /// True when grad_m_norm is a Monte-Carlo estimate rather than exact.
  bool grad_m_estimated = false;
  /// Tallies summed over the batch.
  EvalCounts evals;
  std::size_t peak_cached_states = 0;
  std::size_t corrections = 0;
};

struct Trajectory {
  std::vector<IterateRecord> iterates;  ///< theta_0 .. theta_tau (fewer on failure)
  StepSchedule schedule;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
};

/// theta_0 for cfg: the fixed vector, or a draw from the (seed, kInitialTheta) substream.
ParamVector initial_theta(const RunConfig& cfg);

/// Mini-batch outer gradient descent:
/// theta_k = theta_{k-1} - (gamma_k / v) sum_w G(theta_{k-1}, T_{k,w}).
///
/// Slot (k, w) owns the substream (seed, kBatchSlot, k, w): the task is drawn
/// first, then the estimator (UFO) consumes its Bernoulli draw. The batch sum
/// runs in slot order. A NonFiniteState aborts the run and returns the
/// partial trajectory with failed = true.
Trajectory run_minibatch_gd(const BilevelProblem& problem, const TaskDistribution& dist,
                            const RunConfig& cfg);

}  // namespace ufoblo
