// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>

#include "ufoblo/piecewise.hpp"

namespace ufoblo {

/// Two equiprobable piecewise tasks on which first-order BLO stalls.
///
/// Task i uses PiecewiseQuadratic{a_i, b_i, A} applied to the first
/// coordinate of the parameter vector. b1 is fixed to zero and b2 is chosen
/// so that the exact meta-gradient at the FO fixed point has magnitude
/// sqrt(2 D).
struct CounterexampleSpec {
  double a1;
  double a2;
  double b1;
  double b2;
  double A;
  double D;
  double alpha;
  int r;

  /// Derives b2 and (unless given) A = |b2/a2 - b1/a1| + 1, then validates.
  static CounterexampleSpec from_parameters(double a1, double a2, double alpha, int r, double D,
                                            std::optional<double> A = std::nullopt);

  /// Checks every invariant, including gap^2 == 2 D to 1e-9 relative.
  void validate() const;

  PiecewiseQuadratic task_function(int index) const;

  friend bool operator==(const CounterexampleSpec&, const CounterexampleSpec&) = default;
};

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Closed-form quantities of the counterexample inside the quadratic segment.
struct CounterexampleConstants {
  double a_star;      ///< slope of the expected FO gradient
  double b_star;
  double x_star;      ///< FO fixed point b*/a*
  double a_hat;       ///< slope of the exact meta-gradient
  double b_hat;
  double theta_star;  ///< stationary point of the meta-objective
  double gap;         ///< |a_hat x* - b_hat|
  Interval interval_I;
};

/// b2 for which the counterexample gap equals sqrt(2 D).
///
/// Throws DegenerateProblem if a1 == a2 and InvalidArgument for parameters
/// outside 0 < a_i < 1/alpha, r >= 1, D > 0.
double derive_b2(double a1, double a2, double alpha, int r, double D);

CounterexampleConstants counterexample_constants(const CounterexampleSpec& spec);

/// One of the two counterexample tasks, embedded in R^dim (dim >= 1).
struct CounterexampleTask {
  CounterexampleSpec spec;
  int index;  ///< 1 or 2
  std::size_t dim = 1;

  PiecewiseQuadratic function() const { return spec.task_function(index); }

  friend bool operator==(const CounterexampleTask&, const CounterexampleTask&) = default;
};

}  // namespace ufoblo
