// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ufoblo/errors.hpp"

namespace ufoblo {

ParamVector meta_grad_exact(const BilevelProblem& problem, std::span<const WeightedTask> tasks,
                            const ParamVector& theta, const InnerLoopConfig& cfg) {
  if (tasks.empty()) throw EmptyDistribution("meta_grad_exact: empty task set");
  validate_probabilities(tasks);
  std::vector<double> acc(theta.size(), 0.0);
  for (const auto& wt : tasks) {
    const ParamVector g = exact_grad_stored(problem, wt.task, theta, cfg).gradient;
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += wt.probability * g[d];
  }
  return ParamVector(std::move(acc));
}

void RegularityConstants::validate() const {
  if (!(L1 > 0.0 && L2 > 0.0 && L3 >= 0.0)) {
    throw InvalidArgument("RegularityConstants: need L1 > 0, L2 > 0, L3 >= 0");
  }
  if (!(alpha >= 0.0) || r < 1) throw InvalidArgument("RegularityConstants: need alpha >= 0, r >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("RegularityConstants: q must lie in (0, 1]");
  if (v == 0) throw InvalidArgument("RegularityConstants: v must be >= 1");
}

double lipschitz_bound(const RegularityConstants& c) {
  c.validate();
  const double growth = std::pow(1.0 + c.alpha * c.L2, 2 * c.r);
  return c.L2 * growth + (c.L1 * c.L3 / c.L2) * (growth - 1.0);
}

double grad_sq_bound(const RegularityConstants& c) {
  c.validate();
  const double amplification = 1.0 + (std::pow(1.0 + c.alpha * c.L2, c.r) - 1.0) / c.q;
  return amplification * amplification * c.L1 * c.L1;
}

double sgd_constant(const RegularityConstants& c) {
  c.validate();
  const double exact_sq = std::pow(1.0 + c.alpha * c.L2, 2 * c.r);
  const double ufo_sq = grad_sq_bound(c) / (c.L1 * c.L1);
  const double v = static_cast<double>(c.v);
  return (ufo_sq + (v - 1.0) * exact_sq) * c.L1 * c.L1 * lipschitz_bound(c) / (2.0 * v);
}

RegularityConstants counterexample_regularity(const CounterexampleSpec& spec, double q,
                                              std::size_t v) {
  const double amax = std::max(spec.a1, spec.a2);
  return {amax * (0.5 + spec.A), amax, amax, spec.alpha, spec.r, q, v};
}

RateReport rate_check(const Trajectory& traj, std::span<const double> exact_norms, double epsilon,
                      double head_fraction) {
  if (traj.schedule.kind != StepSchedule::Kind::kInverseSqrt) {
    throw ScheduleMismatch("rate_check: requires the inverse-sqrt schedule, got " +
                           traj.schedule.describe());
  }
  if (exact_norms.empty()) throw InvalidArgument("rate_check: empty norm series");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw InvalidArgument("rate_check: epsilon must lie in (0, 0.5)");
  if (!(head_fraction > 0.0 && head_fraction < 1.0)) {
    throw InvalidArgument("rate_check: head fraction must lie in (0, 1)");
  }

  RateReport rep;
  rep.epsilon = epsilon;
  const std::size_t n = exact_norms.size();
  rep.min_so_far.reserve(n);
  rep.scaled.reserve(n);
  double running = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    running = std::min(running, exact_norms[i] * exact_norms[i]);
    const auto k = static_cast<double>(i + 1);
    rep.min_so_far.push_back(running);
    rep.scaled.push_back(running * std::pow(k, 0.5 - epsilon));
  }
  rep.head_end = std::max<std::size_t>(1, static_cast<std::size_t>(head_fraction * static_cast<double>(n)));
  rep.head_end = std::min(rep.head_end, n);
  rep.head_max = *std::max_element(rep.scaled.begin(), rep.scaled.begin() + static_cast<std::ptrdiff_t>(rep.head_end));
  rep.tail_max = rep.head_end < n
                     ? *std::max_element(rep.scaled.begin() + static_cast<std::ptrdiff_t>(rep.head_end), rep.scaled.end())
                     : 0.0;
  rep.consistent = rep.tail_max == 0.0 || rep.tail_max < rep.head_max;
  rep.verdict = rep.consistent
                    ? "consistent: scaled min-so-far decays; the o(k^{-1/2+eps}) rate is not falsified"
                    : "not consistent: scaled min-so-far grows; the rate is falsified on this horizon";
  return rep;
}

std::vector<double> recorded_grad_norms(const Trajectory& traj) {
  std::vector<double> norms;
  norms.reserve(traj.iterates.size());
  for (const auto& it : traj.iterates) {
    if (!it.grad_m_norm) {
      throw InvalidArgument("recorded_grad_norms: iterate " + std::to_string(it.k) +
                            " has no meta-gradient norm");
    }
    norms.push_back(*it.grad_m_norm);
  }
  return norms;
}

bool ResourceReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ResourceCheck& c) { return c.passed; });
}

ResourceReport resource_report(std::span<const GradientEstimate> estimates,
                               const EstimatorKind& kind, const InnerLoopConfig& cfg,
                               UfoOptions options) {
  if (estimates.empty()) throw InvalidArgument("resource_report: no estimates");
  const auto r = static_cast<std::size_t>(cfg.r);
  const std::size_t rerun_evals = r + r * (r - 1) / 2;

  ResourceReport rep;
  rep.calls = estimates.size();
  rep.min_peak_cached_states = std::numeric_limits<std::size_t>::max();
  std::size_t corrections = 0;
  bool all_exact_evals = true;
  bool all_zero_hvp = true;
  for (const auto& e : estimates) {
    rep.mean_inner_grad_evals += static_cast<double>(e.meta.inner_grad_evals);
    rep.mean_outer_grad_evals += static_cast<double>(e.meta.outer_grad_evals);
    rep.mean_hvp_evals += static_cast<double>(e.meta.hvp_evals);
    rep.max_peak_cached_states = std::max(rep.max_peak_cached_states, e.meta.peak_cached_states);
    rep.min_peak_cached_states = std::min(rep.min_peak_cached_states, e.meta.peak_cached_states);
    if (e.meta.correction_taken.value_or(false)) ++corrections;
    if (e.meta.inner_grad_evals != rerun_evals) all_exact_evals = false;
    if (e.meta.hvp_evals != 0) all_zero_hvp = false;
  }
  const auto n = static_cast<double>(rep.calls);
  rep.mean_inner_grad_evals /= n;
  rep.mean_outer_grad_evals /= n;
  rep.mean_hvp_evals /= n;
  rep.correction_frequency = static_cast<double>(corrections) / n;

  auto add = [&](std::string name, bool ok, std::string detail) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };
  const std::string peaks = "peak in [" + std::to_string(rep.min_peak_cached_states) + ", " +
                            std::to_string(rep.max_peak_cached_states) + "]";

  switch (kind.type) {
    case EstimatorKind::Type::kFO:
      add("fo-peak<=3", rep.max_peak_cached_states <= 3, peaks);
      add("fo-hvp==0", all_zero_hvp, "mean hvp " + std::to_string(rep.mean_hvp_evals));
      break;
    case EstimatorKind::Type::kExactStored:
      add("stored-peak==r",
          rep.min_peak_cached_states == r && rep.max_peak_cached_states == r, peaks);
      break;
    case EstimatorKind::Type::kExactRerun:
      add("rerun-peak<=3", rep.max_peak_cached_states <= 3, peaks);
      add("rerun-inner-evals==r+r(r-1)/2", all_exact_evals,
          "expected " + std::to_string(rerun_evals) + ", mean " +
              std::to_string(rep.mean_inner_grad_evals));
      break;
    case EstimatorKind::Type::kExactCheckpointed: {
      const std::size_t k = kind.num_checkpoints == 0 ? default_checkpoint_count(cfg.r)
                                                      : kind.num_checkpoints;
      const std::size_t bound = k + (r + k - 1) / k + 1;
      add("checkpoint-peak<=K+ceil(r/K)+1", rep.max_peak_cached_states <= bound,
          peaks + ", bound " + std::to_string(bound));
      add("checkpoint-inner-evals<=2r", rep.mean_inner_grad_evals <= 2.0 * static_cast<double>(r),
          "mean " + std::to_string(rep.mean_inner_grad_evals));
      break;
    }
    case EstimatorKind::Type::kUFO: {
      const double q = kind.q;
      const double band = 3.0 * std::sqrt(q * (1.0 - q) / n);
      add("ufo-peak<=3", rep.max_peak_cached_states <= 3, peaks);
      add("ufo-correction-frequency", std::abs(rep.correction_frequency - q) <= band,
          "frequency " + std::to_string(rep.correction_frequency) + ", q " + std::to_string(q) +
              " +- " + std::to_string(band));
      const double extra = options.fused ? static_cast<double>(r * (r - 1) / 2)
                                         : static_cast<double>(rerun_evals);
      const double expected = static_cast<double>(r) + q * extra;
      add("ufo-mean-inner-evals", std::abs(rep.mean_inner_grad_evals - expected) <= band * extra,
          "mean " + std::to_string(rep.mean_inner_grad_evals) + ", expected " +
              std::to_string(expected));
      break;
    }
  }
  return rep;
}

}  // namespace ufoblo
