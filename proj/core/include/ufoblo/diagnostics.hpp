// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ufoblo/core.hpp"
#include "ufoblo/estimators.hpp"
#include "ufoblo/outer_loop.hpp"

namespace ufoblo {

/// Probability-weighted average of exact_grad_stored over a finite task set.
/// Throws ProbabilityMismatch if the weights do not sum to one.
ParamVector meta_grad_exact(const BilevelProblem& problem, std::span<const WeightedTask> tasks,
                            const ParamVector& theta, const InnerLoopConfig& cfg);

/// Bounds L1 (outer gradient), L2 (Hessians), L3 (Hessian Lipschitz) together
/// with the algorithm parameters the bounds depend on.
struct RegularityConstants {
  double L1;
  double L2;
  double L3;
  double alpha;
  int r;
  double q = 1.0;
  std::size_t v = 1;

  void validate() const;
};

/// Lipschitz constant of the meta-gradient:
/// L2 (1 + a L2)^{2r} + (L1 L3 / L2) ((1 + a L2)^{2r} - 1).
double lipschitz_bound(const RegularityConstants& c);

/// Second-moment bound of the UFO estimate: (1 + ((1 + a L2)^r - 1) / q)^2 L1^2.
double grad_sq_bound(const RegularityConstants& c);

/// Constant multiplying sum gamma_u^2 in the mini-batch descent inequality.
double sgd_constant(const RegularityConstants& c);

/// Regularity constants of the counterexample family: L1 = max a_i (1/2 + A),
/// L2 = L3 = max a_i.
RegularityConstants counterexample_regularity(const CounterexampleSpec& spec, double q = 1.0,
                                              std::size_t v = 1);

struct RateReport {
  std::vector<double> min_so_far;  ///< m_k = min_{u<k} |grad M(theta_u)|^2, k = 1..n
  std::vector<double> scaled;      ///< m_k * k^{0.5 - eps}
  double epsilon;
  std::size_t head_end;  ///< scaled[0 .. head_end) is the head
  double head_max;
  double tail_max;
  /// True when the scaled tail does not exceed the head (or is identically
  /// zero). A finite run can only falsify the asymptotic rate, never prove it.
  bool consistent;
  std::string verdict;
};

/// Finite-horizon reading of min_{u<k} E|grad M|^2 = o(k^{-1/2 + eps}).
/// exact_norms holds |grad M(theta_u)| for u = 0..n-1. Throws ScheduleMismatch
/// unless traj.schedule is InverseSqrt.
RateReport rate_check(const Trajectory& traj, std::span<const double> exact_norms,
                      double epsilon = 0.1, double head_fraction = 0.1);

/// Collects exact meta-gradient norms recorded in a trajectory; throws
/// InvalidArgument if any iterate lacks one.
std::vector<double> recorded_grad_norms(const Trajectory& traj);

struct ResourceCheck {
  std::string name;
  bool passed;
  std::string detail;
};

struct ResourceReport {
  std::size_t calls = 0;
  double mean_inner_grad_evals = 0.0;
  double mean_outer_grad_evals = 0.0;
  double mean_hvp_evals = 0.0;
  std::size_t max_peak_cached_states = 0;
  std::size_t min_peak_cached_states = 0;
  double correction_frequency = 0.0;  ///< UFO only
  std::vector<ResourceCheck> checks;

  bool all_passed() const;
};

/// Aggregates tallies and checks the resource laws for the given estimator:
/// stored keeps exactly r states, FO and recomputation at most 3, the
/// recomputing estimator uses r + r(r-1)/2 inner gradients, checkpointing
/// stays within K + ceil(r/K) + 1 states and 2r inner gradients, UFO's
/// correction frequency and mean inner-gradient count lie within 3-sigma
/// binomial bands.
ResourceReport resource_report(std::span<const GradientEstimate> estimates,
                               const EstimatorKind& kind, const InnerLoopConfig& cfg,
                               UfoOptions options = {});

}  // namespace ufoblo
