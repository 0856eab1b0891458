// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ufoblo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter vector (inner state, gradient, HVP) acquired a NaN or Inf entry.
class NonFiniteState : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A constructor or configuration argument violates its documented range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class EmptyDistribution : public Error {
 public:
  using Error::Error;
};

/// The counterexample construction has no solution (a1 == a2).
class DegenerateProblem : public Error {
 public:
  using Error::Error;
};

class InvalidCheckpointCount : public Error {
 public:
  using Error::Error;
};

/// Task probabilities do not sum to one.
class ProbabilityMismatch : public Error {
 public:
  using Error::Error;
};

class ScheduleMismatch : public Error {
 public:
  using Error::Error;
};

/// A finite-difference probe evaluated the objective to NaN/Inf.
class NonFiniteEvaluation : public Error {
 public:
  using Error::Error;
};

}  // namespace ufoblo
