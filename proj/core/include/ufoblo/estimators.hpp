// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "ufoblo/core.hpp"

namespace ufoblo {

/// Resource tallies attached to every gradient estimate.
///
/// peak_cached_states counts inner states held for later reuse in addition
/// to the single working iterate: the stored-state array, the checkpoint
/// store plus replay buffer, or the retained copy of theta that the
/// recomputing estimator restarts from.
struct ResourceMeta {
  std::size_t inner_grad_evals = 0;
  std::size_t outer_grad_evals = 0;
  std::size_t hvp_evals = 0;
  std::size_t peak_cached_states = 0;
  /// The Bernoulli outcome; set only by the UFO estimator.
  std::optional<bool> correction_taken;
};

struct GradientEstimate {
  ParamVector gradient;
  ResourceMeta meta;
};

/// Which inner-loop gradient estimator to run.
struct EstimatorKind {
  enum class Type { kFO, kExactStored, kExactRerun, kExactCheckpointed, kUFO };

  Type type = Type::kExactStored;
  double q = 1.0;                   ///< UFO correction probability, in (0, 1]
  std::size_t num_checkpoints = 0;  ///< 0 selects ceil(sqrt(r))

  static EstimatorKind fo() { return {Type::kFO}; }
  static EstimatorKind exact_stored() { return {Type::kExactStored}; }
  static EstimatorKind exact_rerun() { return {Type::kExactRerun}; }
  static EstimatorKind exact_checkpointed(std::size_t checkpoints = 0) {
    return {Type::kExactCheckpointed, 1.0, checkpoints};
  }
  /// Throws InvalidArgument unless 0 < q <= 1.
  static EstimatorKind ufo(double q);

  bool is_exact() const {
    return type == Type::kExactStored || type == Type::kExactRerun ||
           type == Type::kExactCheckpointed;
  }

  /// "fo", "exact-stored", "exact-rerun", "exact-checkpointed", "ufo".
  std::string name() const;
  /// Parses the names produced by name(); "ufo" takes q from the argument.
  static EstimatorKind parse(std::string_view name, double q = 1.0);

  friend bool operator==(const EstimatorKind&, const EstimatorKind&) = default;
};

/// First-order estimate: outer gradient at the end of the rollout.
GradientEstimate fo_grad(const BilevelProblem& problem, const TaskSpec& task,
                         const ParamVector& theta, const InnerLoopConfig& cfg);

/// Exact gradient by back-propagation through stored inner states.
GradientEstimate exact_grad_stored(const BilevelProblem& problem, const TaskSpec& task,
                                   const ParamVector& theta, const InnerLoopConfig& cfg);

/// Exact gradient recomputing every inner state from theta during the
/// backward pass: O(1) states, r + r(r-1)/2 inner gradients.
GradientEstimate exact_grad_rerun(const BilevelProblem& problem, const TaskSpec& task,
                                  const ParamVector& theta, const InnerLoopConfig& cfg);

/// Exact gradient with checkpoints at states floor(j r / K), j = 0..K-1;
/// each segment is replayed from its checkpoint during the backward pass.
/// num_checkpoints == 0 selects ceil(sqrt(r)); values above r throw
/// InvalidCheckpointCount.
GradientEstimate exact_grad_checkpointed(const BilevelProblem& problem, const TaskSpec& task,
                                         const ParamVector& theta, const InnerLoopConfig& cfg,
                                         std::size_t num_checkpoints = 0);

std::size_t default_checkpoint_count(int r);

struct UfoOptions {
  /// Reuse the FO forward pass for the correction instead of re-running the
  /// recomputing estimator from scratch. Same gradient, fewer inner gradients.
  bool fused = false;
};

/// Unbiased first-order estimate: the FO gradient, then one Bernoulli(q) draw
/// from rng; on success the exact gradient c is computed and the result is
/// b + (c - b) / q.
GradientEstimate ufo_grad(const BilevelProblem& problem, const TaskSpec& task,
                          const ParamVector& theta, const InnerLoopConfig& cfg, double q,
                          RngStream& rng, UfoOptions options = {});

/// The UFO combination for a given outcome xi: fo if !xi, else
/// (1/q) exact + (1 - 1/q) fo. Evaluated so that q == 1 returns exact bitwise.
ParamVector ufo_combine(const ParamVector& fo, const ParamVector& exact, double q, bool xi);

/// Dispatches on kind. rng is used only by UFO.
GradientEstimate estimate_gradient(const BilevelProblem& problem, const TaskSpec& task,
                                   const ParamVector& theta, const InnerLoopConfig& cfg,
                                   const EstimatorKind& kind, RngStream& rng,
                                   UfoOptions options = {});

}  // namespace ufoblo
