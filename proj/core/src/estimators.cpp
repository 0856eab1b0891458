// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/estimators.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ufoblo/errors.hpp"

namespace ufoblo {

namespace {

void check_theta(const BilevelProblem& problem, const TaskSpec& task, const ParamVector& theta) {
  const std::size_t expected = problem.dimension(task);
  if (theta.size() != expected) {
    throw DimensionMismatch("estimator: theta has length " + std::to_string(theta.size()) +
                            ", task expects " + std::to_string(expected));
  }
}

// One inner GD step; must stay arithmetically identical to the step in rollout().
ParamVector inner_step(const BilevelProblem& problem, const TaskSpec& task, const ParamVector& phi,
                       const InnerLoopConfig& cfg, int j) {
  try {
    return phi.minus_scaled(problem.inner_grad(phi, task), cfg.alpha);
  } catch (const NonFiniteState& e) {
    throw NonFiniteState("inner step " + std::to_string(j) + " of " + std::to_string(cfg.r) +
                         " diverged (" + e.what() + ")");
  }
}

// Adjoint update b <- b - alpha * H(phi) b.
ParamVector adjoint_step(const BilevelProblem& problem, const TaskSpec& task, const ParamVector& phi,
                         const ParamVector& b, double alpha) {
  return b.minus_scaled(problem.inner_hvp(phi, task, b), alpha);
}

ResourceMeta meta_from(const InstrumentedProblem& ip, std::size_t peak) {
  ResourceMeta meta;
  meta.inner_grad_evals = ip.counts().inner_grad_evals;
  meta.outer_grad_evals = ip.counts().outer_grad_evals;
  meta.hvp_evals = ip.counts().hvp_evals;
  meta.peak_cached_states = peak;
  return meta;
}

// Backward pass of the recomputing estimator, starting from the adjoint b at phi_r.
ParamVector rerun_backward(const BilevelProblem& problem, const TaskSpec& task,
                           const ParamVector& theta, const InnerLoopConfig& cfg, ParamVector b) {
  for (int j1 = cfg.r; j1 >= 1; --j1) {
    ParamVector phi = theta;
    for (int j2 = 1; j2 <= j1 - 1; ++j2) phi = inner_step(problem, task, phi, cfg, j2);
    b = adjoint_step(problem, task, phi, b, cfg.alpha);
  }
  return b;
}

}  // namespace

EstimatorKind EstimatorKind::ufo(double q) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("UFO estimator: q must lie in (0, 1]");
  return {Type::kUFO, q, 0};
}

std::string EstimatorKind::name() const {
  switch (type) {
    case Type::kFO:
      return "fo";
    case Type::kExactStored:
      return "exact-stored";
    case Type::kExactRerun:
      return "exact-rerun";
    case Type::kExactCheckpointed:
      return "exact-checkpointed";
    case Type::kUFO:
      return "ufo";
  }
  return "unknown";
}

EstimatorKind EstimatorKind::parse(std::string_view name, double q) {
  if (name == "fo") return fo();
  if (name == "exact-stored" || name == "exact") return exact_stored();
  if (name == "exact-rerun") return exact_rerun();
  if (name == "exact-checkpointed") return exact_checkpointed();
  if (name == "ufo") return ufo(q);
  throw InvalidArgument("unknown estimator '" + std::string(name) + "'");
}

GradientEstimate fo_grad(const BilevelProblem& problem, const TaskSpec& task,
                         const ParamVector& theta, const InnerLoopConfig& cfg) {
  check_theta(problem, task, theta);
  InstrumentedProblem ip(problem);
  RolloutResult roll = rollout(ip, task, theta, cfg, /*keep_states=*/false);
  ParamVector g = ip.outer_grad(roll.final_state, task);
  return {std::move(g), meta_from(ip, roll.peak_cached_states)};
}

GradientEstimate exact_grad_stored(const BilevelProblem& problem, const TaskSpec& task,
                                   const ParamVector& theta, const InnerLoopConfig& cfg) {
  check_theta(problem, task, theta);
  InstrumentedProblem ip(problem);
  std::vector<ParamVector> states;  // phi_0 .. phi_{r-1}
  states.reserve(static_cast<std::size_t>(cfg.r));
  ParamVector phi = theta;
  for (int j = 1; j <= cfg.r; ++j) {
    states.push_back(phi);
    phi = inner_step(ip, task, phi, cfg, j);
  }
  ParamVector b = ip.outer_grad(phi, task);
  for (int j = cfg.r; j >= 1; --j) {
    b = adjoint_step(ip, task, states[static_cast<std::size_t>(j - 1)], b, cfg.alpha);
  }
  return {std::move(b), meta_from(ip, states.size())};
}

GradientEstimate exact_grad_rerun(const BilevelProblem& problem, const TaskSpec& task,
                                  const ParamVector& theta, const InnerLoopConfig& cfg) {
  check_theta(problem, task, theta);
  InstrumentedProblem ip(problem);
  ParamVector phi = theta;
  for (int j = 1; j <= cfg.r; ++j) phi = inner_step(ip, task, phi, cfg, j);
  ParamVector b = rerun_backward(ip, task, theta, cfg, ip.outer_grad(phi, task));
  // Only theta is kept across the backward pass.
  return {std::move(b), meta_from(ip, 1)};
}

std::size_t default_checkpoint_count(int r) {
  if (r < 1) throw InvalidArgument("default_checkpoint_count: r must be >= 1");
  auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(r))));
  while (k * k < static_cast<std::size_t>(r)) ++k;
  while (k > 1 && (k - 1) * (k - 1) >= static_cast<std::size_t>(r)) --k;
  return k;
}

GradientEstimate exact_grad_checkpointed(const BilevelProblem& problem, const TaskSpec& task,
                                         const ParamVector& theta, const InnerLoopConfig& cfg,
                                         std::size_t num_checkpoints) {
  check_theta(problem, task, theta);
  const auto r = static_cast<std::size_t>(cfg.r);
  const std::size_t k = num_checkpoints == 0 ? default_checkpoint_count(cfg.r) : num_checkpoints;
  if (k > r) {
    throw InvalidCheckpointCount("exact_grad_checkpointed: " + std::to_string(k) +
                                 " checkpoints exceed r = " + std::to_string(r));
  }

  // Segment s covers states [bounds[s], bounds[s + 1]).
  std::vector<std::size_t> bounds(k + 1);
  for (std::size_t s = 0; s < k; ++s) bounds[s] = s * r / k;
  bounds[k] = r;

  InstrumentedProblem ip(problem);
  std::vector<ParamVector> checkpoints;
  checkpoints.reserve(k);
  ParamVector phi = theta;
  std::size_t next = 0;
  for (std::size_t j = 0; j < r; ++j) {
    if (next < k && bounds[next] == j) {
      checkpoints.push_back(phi);
      ++next;
    }
    phi = inner_step(ip, task, phi, cfg, static_cast<int>(j + 1));
  }
  ParamVector b = ip.outer_grad(phi, task);

  std::size_t peak = checkpoints.size();
  for (std::size_t s = k; s-- > 0;) {
    // Replay states bounds[s] + 1 .. bounds[s + 1] - 1; the first comes from the checkpoint.
    std::vector<ParamVector> replay;
    replay.reserve(bounds[s + 1] - bounds[s] - 1);
    ParamVector cur = checkpoints[s];
    for (std::size_t j = bounds[s]; j + 1 < bounds[s + 1]; ++j) {
      cur = inner_step(ip, task, cur, cfg, static_cast<int>(j + 1));
      replay.push_back(cur);
    }
    peak = std::max(peak, checkpoints.size() + replay.size());
    for (std::size_t j = bounds[s + 1]; j-- > bounds[s];) {
      const ParamVector& state = j == bounds[s] ? checkpoints[s] : replay[j - bounds[s] - 1];
      b = adjoint_step(ip, task, state, b, cfg.alpha);
    }
    checkpoints.pop_back();
  }
  return {std::move(b), meta_from(ip, peak)};
}

ParamVector ufo_combine(const ParamVector& fo, const ParamVector& exact, double q, bool xi) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("ufo_combine: q must lie in (0, 1]");
  require_same_size(fo, exact, "ufo_combine");
  if (!xi) return fo;
  if (q == 1.0) return exact;
  const double w = 1.0 / q;
  std::vector<double> out(fo.size());
  for (std::size_t i = 0; i < fo.size(); ++i) out[i] = w * exact[i] + (1.0 - w) * fo[i];
  return ParamVector(std::move(out));
}

GradientEstimate ufo_grad(const BilevelProblem& problem, const TaskSpec& task,
                          const ParamVector& theta, const InnerLoopConfig& cfg, double q,
                          RngStream& rng, UfoOptions options) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("ufo_grad: q must lie in (0, 1]");
  GradientEstimate first = fo_grad(problem, task, theta, cfg);
  const bool xi = rng.bernoulli(q);
  ResourceMeta meta = first.meta;
  meta.correction_taken = xi;
  if (!xi) return {std::move(first.gradient), meta};

  ParamVector exact(1);
  if (options.fused) {
    InstrumentedProblem ip(problem);
    exact = rerun_backward(ip, task, theta, cfg, first.gradient);
    meta.inner_grad_evals += ip.counts().inner_grad_evals;
    meta.hvp_evals += ip.counts().hvp_evals;
    meta.peak_cached_states = std::max<std::size_t>(meta.peak_cached_states, 1);
  } else {
    GradientEstimate corr = exact_grad_rerun(problem, task, theta, cfg);
    meta.inner_grad_evals += corr.meta.inner_grad_evals;
    meta.outer_grad_evals += corr.meta.outer_grad_evals;
    meta.hvp_evals += corr.meta.hvp_evals;
    meta.peak_cached_states = std::max(meta.peak_cached_states, corr.meta.peak_cached_states);
    exact = std::move(corr.gradient);
  }
  return {ufo_combine(first.gradient, exact, q, true), meta};
}

GradientEstimate estimate_gradient(const BilevelProblem& problem, const TaskSpec& task,
                                   const ParamVector& theta, const InnerLoopConfig& cfg,
                                   const EstimatorKind& kind, RngStream& rng, UfoOptions options) {
  switch (kind.type) {
    case EstimatorKind::Type::kFO:
      return fo_grad(problem, task, theta, cfg);
    case EstimatorKind::Type::kExactStored:
      return exact_grad_stored(problem, task, theta, cfg);
    case EstimatorKind::Type::kExactRerun:
      return exact_grad_rerun(problem, task, theta, cfg);
    case EstimatorKind::Type::kExactCheckpointed:
      return exact_grad_checkpointed(problem, task, theta, cfg, kind.num_checkpoints);
    case EstimatorKind::Type::kUFO:
      return ufo_grad(problem, task, theta, cfg, kind.q, rng, options);
  }
  throw InvalidArgument("estimate_gradient: unknown estimator kind");
}

}  // namespace ufoblo
