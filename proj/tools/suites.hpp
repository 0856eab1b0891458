// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ufoblo/core.hpp"

namespace ufoblo::cli {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  std::string detail;  ///< first failure, or a short summary
};

struct SuiteOptions {
  std::uint64_t seed = 0;
  std::size_t instances = 100;     ///< estimator equivalence, per family
  std::size_t fd_instances = 50;   ///< finite-difference checks, per family
  std::size_t resource_calls = 10000;
  std::size_t regularity_points = 100000;
};

/// Runs every property suite against the given problem implementation. The
/// analytic families are always used for task generation; passing a modified
/// problem lets callers confirm that the suites detect broken derivatives.
std::vector<SuiteResult> run_check_suites(const BilevelProblem& problem, const SuiteOptions& options);

}  // namespace ufoblo::cli
