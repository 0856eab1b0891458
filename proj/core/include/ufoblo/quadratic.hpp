// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "ufoblo/param_vector.hpp"

namespace ufoblo {

/// Diagonal quadratic sum_d (a_d / 2) (phi_d - b_d / a_d)^2, used as both
/// inner and outer loss. Gradient a * phi - b, Hessian diag(a).
struct QuadraticTask {
  std::vector<double> a;  ///< per-coordinate curvature, all > 0
  std::vector<double> b;

  /// Throws InvalidArgument on empty, mismatched, non-positive or non-finite input.
  void validate() const;
  std::size_t dim() const { return a.size(); }

  double loss(const ParamVector& phi) const;
  ParamVector grad(const ParamVector& phi) const;
  ParamVector hvp(const ParamVector& dir) const;

  friend bool operator==(const QuadraticTask&, const QuadraticTask&) = default;
};

}  // namespace ufoblo
