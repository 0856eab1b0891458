// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ufoblo/errors.hpp"

namespace ufoblo {

namespace {

double finite_or_throw(double value, const char* what) {
  if (!std::isfinite(value)) throw NonFiniteEvaluation(std::string(what) + ": non-finite probe");
  return value;
}

}  // namespace

double FDConfig::step_for(double x) const {
  if (!(rel_step > 0.0)) throw InvalidArgument("FDConfig: step must be > 0");
  return rel_step * std::max(1.0, std::abs(x));
}

ParamVector fd_grad(const ScalarFn& f, const ParamVector& phi, const FDConfig& fd) {
  std::vector<double> base = phi.to_vector();
  std::vector<double> grad(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double h = fd.step_for(phi[i]);
    std::vector<double> probe = base;
    probe[i] = base[i] + h;
    const double up = finite_or_throw(f(ParamVector(probe)), "fd_grad");
    probe[i] = base[i] - h;
    const double down = finite_or_throw(f(ParamVector(probe)), "fd_grad");
    grad[i] = (up - down) / (2.0 * h);
  }
  return ParamVector(std::move(grad));
}

ParamVector fd_hvp(const VectorFn& grad, const ParamVector& phi, const ParamVector& dir,
                   const FDConfig& fd) {
  require_same_size(phi, dir, "fd_hvp");
  const double h = fd.step_for(phi.max_abs());
  ParamVector up(1);
  ParamVector down(1);
  try {
    up = grad(phi.plus_scaled(dir, h));
    down = grad(phi.minus_scaled(dir, h));
  } catch (const NonFiniteState& e) {
    throw NonFiniteEvaluation(std::string("fd_hvp: ") + e.what());
  }
  require_same_size(up, phi, "fd_hvp gradient");
  std::vector<double> out(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) out[i] = (up[i] - down[i]) / (2.0 * h);
  return ParamVector(std::move(out));
}

McResult mc_mean_test(const std::function<ParamVector()>& sampler, const ParamVector& reference,
                      std::size_t n) {
  if (n < 100) throw InvalidArgument("mc_mean_test: need n >= 100");
  const std::size_t p = reference.size();
  // Welford accumulation per coordinate.
  std::vector<double> mean(p, 0.0);
  std::vector<double> m2(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const ParamVector x = sampler();
    require_same_size(x, reference, "mc_mean_test");
    const auto count = static_cast<double>(i + 1);
    for (std::size_t d = 0; d < p; ++d) {
      const double delta = x[d] - mean[d];
      mean[d] += delta / count;
      m2[d] += delta * (x[d] - mean[d]);
    }
  }
  std::vector<double> se(p);
  double max_z = 0.0;
  const auto nd = static_cast<double>(n);
  for (std::size_t d = 0; d < p; ++d) {
    se[d] = std::sqrt(m2[d] / (nd - 1.0) / nd);
    const double dev = std::abs(mean[d] - reference[d]);
    double z = 0.0;
    if (se[d] > 0.0) {
      z = dev / se[d];
    } else if (dev > 0.0) {
      z = std::numeric_limits<double>::infinity();
    }
    max_z = std::max(max_z, z);
  }
  return {ParamVector(std::move(mean)), std::move(se), max_z};
}

ParamVector enumerate_expected_grad(const BilevelProblem& problem,
                                    std::span<const WeightedTask> tasks, const ParamVector& theta,
                                    const InnerLoopConfig& cfg, const EstimatorKind& kind) {
  if (tasks.empty()) throw EmptyDistribution("enumerate_expected_grad: empty task set");
  validate_probabilities(tasks);
  std::vector<double> acc(theta.size(), 0.0);
  auto accumulate = [&](const ParamVector& g, double weight) {
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += weight * g[d];
  };
  RngStream unused(0);
  for (const auto& wt : tasks) {
    if (kind.type == EstimatorKind::Type::kUFO) {
      const ParamVector fo = fo_grad(problem, wt.task, theta, cfg).gradient;
      const ParamVector exact = exact_grad_rerun(problem, wt.task, theta, cfg).gradient;
      accumulate(ufo_combine(fo, exact, kind.q, false), wt.probability * (1.0 - kind.q));
      accumulate(ufo_combine(fo, exact, kind.q, true), wt.probability * kind.q);
    } else {
      accumulate(estimate_gradient(problem, wt.task, theta, cfg, kind, unused).gradient,
                 wt.probability);
    }
  }
  return ParamVector(std::move(acc));
}

double meta_objective(const BilevelProblem& problem, std::span<const WeightedTask> tasks,
                      const ParamVector& theta, const InnerLoopConfig& cfg) {
  validate_probabilities(tasks);
  double acc = 0.0;
  for (const auto& wt : tasks) {
    const ParamVector phi_r = rollout(problem, wt.task, theta, cfg, false).final_state;
    acc += wt.probability * problem.outer_loss(phi_r, wt.task);
  }
  return acc;
}

}  // namespace ufoblo
