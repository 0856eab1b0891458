// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/piecewise.hpp"

#include <cmath>

#include "ufoblo/errors.hpp"

namespace ufoblo {

void validate(const PiecewiseQuadratic& f) {
  if (!(std::isfinite(f.a) && std::isfinite(f.b) && std::isfinite(f.A))) {
    throw InvalidArgument("PiecewiseQuadratic: non-finite parameter");
  }
  if (!(f.a > 0.0)) throw InvalidArgument("PiecewiseQuadratic: a must be > 0");
  if (!(f.A > 0.0)) throw InvalidArgument("PiecewiseQuadratic: A must be > 0");
}

double piecewise_value(double x, const PiecewiseQuadratic& f) {
  const double a = f.a;
  const double A = f.A;
  const double z = std::abs(x - f.center());
  if (z <= A) return 0.5 * a * z * z;
  if (z <= A + 1.0) {
    const double d = z - A;
    return -a * d * d * d / 6.0 + 0.5 * a * d * d + a * A * z - 0.5 * a * A * A;
  }
  return (0.5 * a + a * A) * z - a / 6.0 - 0.5 * a * A * A - 0.5 * a * A;
}

double piecewise_grad(double x, const PiecewiseQuadratic& f) {
  const double a = f.a;
  const double A = f.A;
  const double offset = x - f.center();
  const double z = std::abs(offset);
  if (z <= A) return a * x - f.b;
  const double sign = offset > 0.0 ? 1.0 : -1.0;
  if (z <= A + 1.0) {
    // a (A + d - d^2/2), arranged so rounding never exceeds the saturation value.
    const double d = z - A;
    return a * (A + d * (1.0 - 0.5 * d)) * sign;
  }
  return (0.5 * a + a * A) * sign;
}

double piecewise_hess(double x, const PiecewiseQuadratic& f) {
  const double a = f.a;
  const double A = f.A;
  const double z = std::abs(x - f.center());
  if (z <= A) return a;
  if (z <= A + 1.0) return -a * z + a + a * A;
  return 0.0;
}

double piecewise_grad_bound(const PiecewiseQuadratic& f) { return f.a * (0.5 + f.A); }

}  // namespace ufoblo
