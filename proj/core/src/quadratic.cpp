// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/quadratic.hpp"

#include <cmath>

#include "ufoblo/errors.hpp"

namespace ufoblo {

void QuadraticTask::validate() const {
  if (a.empty()) throw InvalidArgument("QuadraticTask: empty curvature vector");
  if (a.size() != b.size()) throw InvalidArgument("QuadraticTask: a and b differ in length");
  for (std::size_t d = 0; d < a.size(); ++d) {
    if (!(a[d] > 0.0) || !std::isfinite(a[d]) || !std::isfinite(b[d])) {
      throw InvalidArgument("QuadraticTask: need finite a_d > 0 and finite b_d");
    }
  }
}

double QuadraticTask::loss(const ParamVector& phi) const {
  if (phi.size() != dim()) throw DimensionMismatch("QuadraticTask::loss");
  double acc = 0.0;
  for (std::size_t d = 0; d < dim(); ++d) {
    const double dev = phi[d] - b[d] / a[d];
    acc += 0.5 * a[d] * dev * dev;
  }
  return acc;
}

ParamVector QuadraticTask::grad(const ParamVector& phi) const {
  if (phi.size() != dim()) throw DimensionMismatch("QuadraticTask::grad");
  std::vector<double> g(dim());
  for (std::size_t d = 0; d < dim(); ++d) g[d] = a[d] * phi[d] - b[d];
  return ParamVector(std::move(g));
}

ParamVector QuadraticTask::hvp(const ParamVector& dir) const {
  if (dir.size() != dim()) throw DimensionMismatch("QuadraticTask::hvp");
  std::vector<double> h(dim());
  for (std::size_t d = 0; d < dim(); ++d) h[d] = a[d] * dir[d];
  return ParamVector(std::move(h));
}

}  // namespace ufoblo
