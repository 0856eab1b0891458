// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ufoblo/counterexample.hpp"
#include "ufoblo/logistic.hpp"
#include "ufoblo/outer_loop.hpp"

namespace ufoblo::cli {

/// Everything a subcommand needs. Built from per-experiment defaults, then a
/// key=value file, then command-line overrides.
struct ExperimentConfig {
  std::string experiment = "synthetic";

  std::size_t tau = 10000;
  std::size_t v = 1;
  std::vector<std::string> estimators{"fo", "ufo"};
  double q = 0.1;
  bool fused = false;
  std::string schedule = "harmonic:10";
  std::optional<double> clip;
  std::string theta0 = "uniform:-10:30";
  double alpha = 0.1;
  int r = 10;
  std::size_t monitor_every = 1;
  std::size_t mc_tasks = 64;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string output_path;

  // Counterexample family.
  double a1 = 0.5;
  double a2 = 1.5;
  double D = 0.06;
  std::optional<double> A;
  double ufo_threshold = 0.05;

  // Quadratic family: tasks separated by ';', coordinates by ','.
  std::string quad_a = "1";
  std::string quad_b = "0";

  FewShotConfig fewshot;

  // Sweep grid. sweep_q is a comma list or "inv-r" for q = 1/r.
  std::vector<int> sweep_r{5, 10, 20};
  std::string sweep_q = "inv-r";
  std::size_t sweep_calls = 2000;

  /// Throws InvalidArgument for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  /// Checks cross-field consistency (estimator names, schedule, theta0 syntax).
  void validate() const;
  /// Flat key=value rendering used in the metadata sidecar.
  std::map<std::string, std::string> to_map() const;
};

/// Defaults for "synthetic", "quadratic", "fewshot-toy", "sweep" or "check".
ExperimentConfig defaults_for(const std::string& experiment);

/// Applies a key=value stream: '#' starts a comment, blank lines are skipped.
void apply_config_stream(ExperimentConfig& config, std::istream& in, const std::string& origin);
void apply_config_file(ExperimentConfig& config, const std::string& path);

/// 17 significant digits, which round-trips every double.
std::string format_double(double x);

/// The subcommands. Each writes CSV to out (and a metadata sidecar next to
/// config.output_path when one is set) and returns the process exit status.
int cmd_synthetic(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_quadratic(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_fewshot_toy(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_sweep(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_check(const ExperimentConfig& config, std::ostream& out, std::ostream& log);

}  // namespace ufoblo::cli
