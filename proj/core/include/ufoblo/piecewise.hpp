// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace ufoblo {

/// One-dimensional piecewise polynomial with minimum at center = b / a.
///
/// With z = |x - b/a| the function is quadratic (a z^2 / 2) for z <= A,
/// blends through a cubic on A < z <= A + 1 and grows linearly beyond, so
/// that f is C^2 with |f'| <= a (1/2 + A), 0 <= f'' <= a and f'' Lipschitz
/// with constant a.
struct PiecewiseQuadratic {
  double a;  ///< curvature in the quadratic region, > 0
  double b;  ///< linear coefficient; minimiser is b / a
  double A;  ///< half-width of the quadratic region, > 0

  double center() const { return b / a; }
};

/// Throws InvalidArgument unless a > 0, A > 0 and all fields are finite.
void validate(const PiecewiseQuadratic& f);

double piecewise_value(double x, const PiecewiseQuadratic& f);
double piecewise_grad(double x, const PiecewiseQuadratic& f);
double piecewise_hess(double x, const PiecewiseQuadratic& f);

/// Saturation value of |f'|, i.e. a (1/2 + A).
double piecewise_grad_bound(const PiecewiseQuadratic& f);

}  // namespace ufoblo
