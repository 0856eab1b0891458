// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/param_vector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ufoblo/errors.hpp"

namespace ufoblo {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

ParamVector::ParamVector(std::size_t dim) : entries_(dim, 0.0) {
  if (dim == 0) throw InvalidArgument("ParamVector: dimension must be >= 1");
}

ParamVector::ParamVector(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw InvalidArgument("ParamVector: dimension must be >= 1");
  if (!all_finite(entries_)) throw NonFiniteState("ParamVector: non-finite entry on construction");
}

ParamVector::ParamVector(std::initializer_list<double> entries)
    : ParamVector(std::vector<double>(entries)) {}

ParamVector ParamVector::filled(std::size_t dim, double value) {
  return ParamVector(std::vector<double>(dim, value));
}

ParamVector ParamVector::checked(std::vector<double> entries, const char* op) {
  if (!all_finite(entries)) {
    throw NonFiniteState(std::string("ParamVector: non-finite result of ") + op);
  }
  return ParamVector(std::move(entries), Unchecked{});
}

void require_same_size(const ParamVector& a, const ParamVector& b, const char* context) {
  if (a.size() != b.size()) {
    throw DimensionMismatch(std::string(context) + ": length " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
  }
}

ParamVector ParamVector::minus_scaled(const ParamVector& direction, double scale) const {
  require_same_size(*this, direction, "minus_scaled");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = entries_[i] - scale * direction.entries_[i];
  return checked(std::move(out), "minus_scaled");
}

ParamVector ParamVector::plus_scaled(const ParamVector& direction, double scale) const {
  require_same_size(*this, direction, "plus_scaled");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = entries_[i] + scale * direction.entries_[i];
  return checked(std::move(out), "plus_scaled");
}

double ParamVector::dot(const ParamVector& other) const {
  require_same_size(*this, other, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < size(); ++i) acc += entries_[i] * other.entries_[i];
  return acc;
}

double ParamVector::squared_norm() const { return dot(*this); }

double ParamVector::norm() const { return std::sqrt(squared_norm()); }

double ParamVector::max_abs() const {
  double m = 0.0;
  for (double x : entries_) m = std::max(m, std::abs(x));
  return m;
}

ParamVector operator+(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "operator+");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a.entries_[i] + b.entries_[i];
  return ParamVector::checked(std::move(out), "operator+");
}

ParamVector operator-(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "operator-");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a.entries_[i] - b.entries_[i];
  return ParamVector::checked(std::move(out), "operator-");
}

ParamVector operator*(double s, const ParamVector& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a.entries_[i];
  return ParamVector::checked(std::move(out), "operator*");
}

}  // namespace ufoblo
