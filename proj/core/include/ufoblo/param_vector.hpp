// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ufoblo {

/// Dense vector of doubles with a fixed length and finite entries.
///
/// Every constructor and arithmetic operation checks that the result is
/// finite and throws NonFiniteState otherwise. All element-wise operations
/// run in index order so that two code paths performing the same sequence of
/// operations produce bitwise-identical results.
class ParamVector {
 public:
  explicit ParamVector(std::size_t dim);
  explicit ParamVector(std::vector<double> entries);
  ParamVector(std::initializer_list<double> entries);

  static ParamVector zeros(std::size_t dim) { return ParamVector(dim); }
  static ParamVector filled(std::size_t dim, double value);

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const noexcept { return entries_[i]; }
  std::span<const double> values() const noexcept { return entries_; }
  const std::vector<double>& to_vector() const noexcept { return entries_; }

  /// Returns this - scale * direction, the shape of every GD and adjoint update.
  ParamVector minus_scaled(const ParamVector& direction, double scale) const;
  /// Returns this + scale * direction.
  ParamVector plus_scaled(const ParamVector& direction, double scale) const;

  double dot(const ParamVector& other) const;
  double squared_norm() const;
  double norm() const;
  double max_abs() const;

  friend ParamVector operator+(const ParamVector& a, const ParamVector& b);
  friend ParamVector operator-(const ParamVector& a, const ParamVector& b);
  friend ParamVector operator*(double s, const ParamVector& a);

  /// Exact (bitwise for non-zero values) element-wise equality.
  friend bool operator==(const ParamVector& a, const ParamVector& b) = default;

 private:
  struct Unchecked {};
  ParamVector(std::vector<double> entries, Unchecked) : entries_(std::move(entries)) {}
  static ParamVector checked(std::vector<double> entries, const char* op);

  std::vector<double> entries_;
};

/// Throws DimensionMismatch unless both vectors have the same length.
void require_same_size(const ParamVector& a, const ParamVector& b, const char* context);

}  // namespace ufoblo
