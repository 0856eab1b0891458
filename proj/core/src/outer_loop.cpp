// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/outer_loop.hpp"

#include <cmath>
#include <string>

#include "ufoblo/diagnostics.hpp"
#include "ufoblo/errors.hpp"

namespace ufoblo {

StepSchedule StepSchedule::constant(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("constant schedule: gamma must be > 0");
  return {Kind::kConstant, gamma};
}

StepSchedule StepSchedule::harmonic(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("harmonic schedule: c must be > 0");
  return {Kind::kHarmonic, c};
}

double StepSchedule::gamma(std::size_t k) const {
  if (k == 0) throw InvalidArgument("StepSchedule::gamma: k starts at 1");
  const auto kd = static_cast<double>(k);
  switch (kind) {
    case Kind::kConstant:
      return value;
    case Kind::kHarmonic:
      return value / kd;
    case Kind::kInverseSqrt:
      return 1.0 / std::sqrt(kd);
  }
  return 0.0;
}

std::string StepSchedule::describe() const {
  switch (kind) {
    case Kind::kConstant:
      return "constant:" + std::to_string(value);
    case Kind::kHarmonic:
      return "harmonic:" + std::to_string(value);
    case Kind::kInverseSqrt:
      return "inverse-sqrt";
  }
  return "unknown";
}

StepSchedule StepSchedule::parse(const std::string& text) {
  if (text == "inverse-sqrt") return inverse_sqrt();
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw InvalidArgument("schedule '" + text + "': expected constant:G, harmonic:C or inverse-sqrt");
  }
  const std::string kind = text.substr(0, colon);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidArgument("schedule '" + text + "': bad numeric value");
  }
  if (kind == "constant") return constant(value);
  if (kind == "harmonic") return harmonic(value);
  throw InvalidArgument("schedule '" + text + "': unknown kind '" + kind + "'");
}

ScheduleReport validate_schedule(const StepSchedule& schedule) {
  switch (schedule.kind) {
    case StepSchedule::Kind::kConstant:
      return {false, false};
    case StepSchedule::Kind::kHarmonic:
      return {true, true};
    case StepSchedule::Kind::kInverseSqrt:
      return {true, false};
  }
  return {false, false};
}

void RunConfig::validate() const {
  if (tau == 0) throw InvalidArgument("RunConfig: tau must be >= 1");
  if (v == 0) throw InvalidArgument("RunConfig: batch size v must be >= 1");
  if (clip_bound && !(*clip_bound > 0.0)) throw InvalidArgument("RunConfig: clip bound must be > 0");
  if (estimator.type == EstimatorKind::Type::kUFO && !(estimator.q > 0.0 && estimator.q <= 1.0)) {
    throw InvalidArgument("RunConfig: UFO q must lie in (0, 1]");
  }
  if (const auto* init = std::get_if<UniformInit>(&theta0)) {
    if (!(init->lo <= init->hi) || init->dim == 0) {
      throw InvalidArgument("RunConfig: uniform theta0 needs lo <= hi and dim >= 1");
    }
  }
}

ParamVector initial_theta(const RunConfig& cfg) {
  if (const auto* fixed = std::get_if<ParamVector>(&cfg.theta0)) return *fixed;
  const auto& init = std::get<UniformInit>(cfg.theta0);
  RngStream rng = RngStream::substream(cfg.seed, StreamPurpose::kInitialTheta, 0, 0);
  std::vector<double> values(init.dim);
  for (double& x : values) x = rng.uniform(init.lo, init.hi);
  return ParamVector(std::move(values));
}

namespace {

void monitor(IterateRecord& rec, const BilevelProblem& problem, const TaskDistribution& dist,
             const RunConfig& cfg) {
  if (cfg.monitor.every == 0 || rec.k % cfg.monitor.every != 0) return;
  if (auto support = dist.finite_support()) {
    rec.grad_m_norm = meta_grad_exact(problem, *support, rec.theta, cfg.inner).norm();
    rec.grad_m_estimated = false;
    return;
  }
  if (cfg.monitor.mc_tasks == 0) return;
  RngStream rng = RngStream::substream(cfg.seed, StreamPurpose::kDiagnostics, rec.k, 0);
  std::vector<double> acc(rec.theta.size(), 0.0);
  for (std::size_t i = 0; i < cfg.monitor.mc_tasks; ++i) {
    const TaskSpec task = dist.sample(rng);
    const ParamVector g = exact_grad_stored(problem, task, rec.theta, cfg.inner).gradient;
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += g[d];
  }
  const double inv = 1.0 / static_cast<double>(cfg.monitor.mc_tasks);
  for (double& x : acc) x *= inv;
  rec.grad_m_norm = ParamVector(std::move(acc)).norm();
  rec.grad_m_estimated = true;
}

}  // namespace

Trajectory run_minibatch_gd(const BilevelProblem& problem, const TaskDistribution& dist,
                            const RunConfig& cfg) {
  cfg.validate();
  Trajectory traj;
  traj.schedule = cfg.schedule;
  traj.seed = cfg.seed;
  traj.iterates.reserve(cfg.tau + 1);

  IterateRecord start;
  start.k = 0;
  start.theta = initial_theta(cfg);
  try {
    monitor(start, problem, dist, cfg);
  } catch (const NonFiniteState& e) {
    traj.failed = true;
    traj.failure = std::string("k=0: ") + e.what();
  }
  traj.iterates.push_back(std::move(start));
  if (traj.failed) return traj;

  for (std::size_t k = 1; k <= cfg.tau; ++k) {
    const ParamVector& prev = traj.iterates.back().theta;
    IterateRecord rec;
    rec.k = k;
    rec.gamma = cfg.schedule.gamma(k);
    try {
      std::vector<double> sum(prev.size(), 0.0);
      for (std::size_t w = 1; w <= cfg.v; ++w) {
        RngStream slot = RngStream::substream(cfg.seed, StreamPurpose::kBatchSlot, k, w);
        const TaskSpec task = dist.sample(slot);
        GradientEstimate est =
            estimate_gradient(problem, task, prev, cfg.inner, cfg.estimator, slot, cfg.ufo_options);
        for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += est.gradient[d];
        rec.evals.inner_grad_evals += est.meta.inner_grad_evals;
        rec.evals.outer_grad_evals += est.meta.outer_grad_evals;
        rec.evals.hvp_evals += est.meta.hvp_evals;
        rec.peak_cached_states = std::max(rec.peak_cached_states, est.meta.peak_cached_states);
        if (est.meta.correction_taken.value_or(false)) ++rec.corrections;
      }
      const double inv_v = 1.0 / static_cast<double>(cfg.v);
      for (double& x : sum) x *= inv_v;
      ParamVector batch(std::move(sum));
      if (cfg.clip_bound) batch = clip_entries(batch, *cfg.clip_bound);
      rec.theta = prev.minus_scaled(batch, rec.gamma);
      rec.batch_gradient = std::move(batch);
      monitor(rec, problem, dist, cfg);
    } catch (const NonFiniteState& e) {
      traj.failed = true;
      traj.failure = "k=" + std::to_string(k) + ": " + e.what();
      return traj;
    }
    traj.iterates.push_back(std::move(rec));
  }
  return traj;
}

}  // namespace ufoblo
