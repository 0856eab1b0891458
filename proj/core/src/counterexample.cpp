// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/counterexample.hpp"

#include <cmath>
#include <string>

#include "ufoblo/errors.hpp"

namespace ufoblo {

namespace {

void check_curvatures(double a1, double a2, double alpha, int r) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("counterexample: alpha must be a positive finite number");
  }
  if (r < 1) throw InvalidArgument("counterexample: r must be >= 1");
  for (double a : {a1, a2}) {
    if (!(a > 0.0 && a * alpha < 1.0)) {
      throw InvalidArgument("counterexample: curvatures must satisfy 0 < a_i < 1/alpha");
    }
  }
}

}  // namespace

double derive_b2(double a1, double a2, double alpha, int r, double D) {
  check_curvatures(a1, a2, alpha, r);
  if (!(D > 0.0) || !std::isfinite(D)) throw InvalidArgument("derive_b2: D must be > 0");
  if (a1 == a2) throw DegenerateProblem("derive_b2: a1 == a2 makes the construction degenerate");

  const double c1 = std::pow(1.0 - alpha * a1, r);
  const double c2 = std::pow(1.0 - alpha * a2, r);
  const double ratio = (a1 * c1 * c1 + a2 * c2 * c2) / (a1 * c1 + a2 * c2);
  const double denom = std::abs(ratio * c2 - c2 * c2);
  if (!(denom > 0.0)) {
    throw DegenerateProblem("derive_b2: denominator underflowed to zero");
  }
  return 2.0 * std::sqrt(2.0 * D) / denom;
}

CounterexampleSpec CounterexampleSpec::from_parameters(double a1, double a2, double alpha, int r,
                                                       double D, std::optional<double> A) {
  CounterexampleSpec spec{};
  spec.a1 = a1;
  spec.a2 = a2;
  spec.b1 = 0.0;
  spec.b2 = derive_b2(a1, a2, alpha, r, D);
  spec.D = D;
  spec.alpha = alpha;
  spec.r = r;
  spec.A = A.value_or(std::abs(spec.b2 / a2 - spec.b1 / a1) + 1.0);
  spec.validate();
  return spec;
}

void CounterexampleSpec::validate() const {
  check_curvatures(a1, a2, alpha, r);
  if (a1 == a2) throw DegenerateProblem("CounterexampleSpec: a1 == a2");
  if (b1 != 0.0) throw InvalidArgument("CounterexampleSpec: b1 must be 0");
  if (!(b2 > 0.0) || !std::isfinite(b2)) throw InvalidArgument("CounterexampleSpec: b2 must be > 0");
  if (!(D > 0.0)) throw InvalidArgument("CounterexampleSpec: D must be > 0");
  if (!(A > std::abs(b1 / a1 - b2 / a2)) || !std::isfinite(A)) {
    throw InvalidArgument("CounterexampleSpec: A must exceed |b1/a1 - b2/a2|");
  }
  const CounterexampleConstants c = counterexample_constants(*this);
  const double target = 2.0 * D;
  if (std::abs(c.gap * c.gap - target) > 1e-9 * target) {
    throw InvalidArgument("CounterexampleSpec: b2 does not satisfy gap^2 = 2 D (gap^2 = " +
                          std::to_string(c.gap * c.gap) + ")");
  }
}

PiecewiseQuadratic CounterexampleSpec::task_function(int index) const {
  if (index == 1) return {a1, b1, A};
  if (index == 2) return {a2, b2, A};
  throw InvalidArgument("CounterexampleSpec: task index must be 1 or 2");
}

CounterexampleConstants counterexample_constants(const CounterexampleSpec& spec) {
  const double c1 = std::pow(1.0 - spec.alpha * spec.a1, spec.r);
  const double c2 = std::pow(1.0 - spec.alpha * spec.a2, spec.r);
  CounterexampleConstants k{};
  k.a_star = 0.5 * (spec.a1 * c1 + spec.a2 * c2);
  k.b_star = 0.5 * (spec.b1 * c1 + spec.b2 * c2);
  k.x_star = k.b_star / k.a_star;
  k.a_hat = 0.5 * (spec.a1 * c1 * c1 + spec.a2 * c2 * c2);
  k.b_hat = 0.5 * (spec.b1 * c1 * c1 + spec.b2 * c2 * c2);
  k.theta_star = k.b_hat / k.a_hat;
  k.gap = std::abs(k.a_hat * k.x_star - k.b_hat);
  k.interval_I = {spec.b2 / spec.a2 - spec.A, spec.b1 / spec.a1 + spec.A};
  return k;
}

}  // namespace ufoblo
