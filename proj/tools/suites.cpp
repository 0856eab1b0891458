// SPDX-License-Identifier: Apache-2.0
#include "suites.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <optional>

#include "ufoblo/counterexample.hpp"
#include "ufoblo/diagnostics.hpp"
#include "ufoblo/errors.hpp"
#include "ufoblo/estimators.hpp"
#include "ufoblo/oracle.hpp"
#include "ufoblo/piecewise.hpp"
#include "ufoblo/problems.hpp"

namespace ufoblo::cli {

namespace {

struct Instance {
  TaskSpec task;
  ParamVector theta;
  InnerLoopConfig cfg;
};

ParamVector uniform_vector(RngStream& rng, std::size_t dim, double lo, double hi) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.uniform(lo, hi);
  return ParamVector(std::move(v));
}

int uniform_int(RngStream& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
}

Instance random_quadratic(RngStream& rng, std::size_t max_dim, int max_r) {
  const std::size_t p = 1 + rng.index(max_dim);
  QuadraticTask t{uniform_vector(rng, p, 0.1, 2.0).to_vector(),
                  uniform_vector(rng, p, -2.0, 2.0).to_vector()};
  const double alpha = rng.uniform(0.01, 0.4);
  const int r = uniform_int(rng, 1, max_r);
  return {TaskSpec(std::move(t)), uniform_vector(rng, p, -3.0, 3.0), InnerLoopConfig(alpha, r)};
}

CounterexampleSpec random_counterexample_spec(RngStream& rng, int max_r) {
  for (;;) {
    const double a1 = rng.uniform(0.1, 1.0);
    const double a2 = rng.uniform(1.2, 3.0);
    const double alpha = rng.uniform(0.02, 0.9 / a2);
    const int r = uniform_int(rng, 1, max_r);
    const double D = rng.uniform(0.01, 0.2);
    try {
      return CounterexampleSpec::from_parameters(a1, a2, alpha, r, D);
    } catch (const Error&) {
      // Rare near-degenerate draws; try again.
    }
  }
}

// theta drawn wide enough that rollouts visit every branch of both tasks.
Instance random_counterexample(RngStream& rng, int max_r, std::size_t max_dim) {
  const CounterexampleSpec spec = random_counterexample_spec(rng, max_r);
  const int index = 1 + static_cast<int>(rng.index(2));
  const std::size_t dim = 1 + rng.index(max_dim);
  const double lo = std::min(spec.b1 / spec.a1, spec.b2 / spec.a2) - spec.A - 3.0;
  const double hi = std::max(spec.b1 / spec.a1, spec.b2 / spec.a2) + spec.A + 3.0;
  return {TaskSpec(CounterexampleTask{spec, index, dim}), uniform_vector(rng, dim, lo, hi),
          InnerLoopConfig(spec.alpha, spec.r)};
}

Instance random_fewshot(RngStream& rng, int max_r) {
  FewShotConfig fc;
  fc.n = 2 + rng.index(4);
  fc.m = 2 + rng.index(3);
  fc.shots = 1 + rng.index(3);
  fc.test_per_class = 1 + rng.index(2);
  FewShotLogisticTask task = sample_fewshot_task(fc, rng);
  const std::size_t dim = task.dim();
  const double alpha = rng.uniform(0.1, 1.0);
  const int r = uniform_int(rng, 1, max_r);
  return {TaskSpec(std::move(task)), uniform_vector(rng, dim, -1.0, 1.0), InnerLoopConfig(alpha, r)};
}

using Generator = std::function<Instance(RngStream&)>;

struct Family {
  const char* name;
  Generator make;
};

std::vector<Family> families(std::size_t max_dim, int max_r) {
  return {
      {"quadratic", [=](RngStream& rng) { return random_quadratic(rng, max_dim, max_r); }},
      {"counterexample", [=](RngStream& rng) { return random_counterexample(rng, max_r, 3); }},
      {"fewshot", [=](RngStream& rng) { return random_fewshot(rng, max_r); }},
  };
}

RngStream suite_stream(const SuiteOptions& o, std::uint64_t suite, std::uint64_t item) {
  return RngStream::substream(o.seed, StreamPurpose::kTest, suite, item);
}

bool bitwise_equal(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

double rel_err(const ParamVector& got, const ParamVector& want, double floor) {
  return (got - want).norm() / std::max(want.norm(), floor);
}

class SuiteBuilder {
 public:
  explicit SuiteBuilder(std::string name) { result_.name = std::move(name); result_.passed = true; }
  void ok() { ++result_.cases; }
  void fail(const std::string& what) {
    ++result_.cases;
    if (result_.passed) result_.detail = what;
    result_.passed = false;
  }
  void expect(bool cond, const std::function<std::string()>& what) { cond ? ok() : fail(what()); }
  SuiteResult finish(std::string summary) {
    if (result_.passed) result_.detail = std::move(summary);
    return std::move(result_);
  }

 private:
  SuiteResult result_;
};

// Closed forms for a diagonal quadratic task, coordinate-wise.
ParamVector quadratic_closed_form(const QuadraticTask& t, const ParamVector& theta,
                                  const InnerLoopConfig& cfg, int power_mult) {
  std::vector<double> g(t.dim());
  for (std::size_t d = 0; d < t.dim(); ++d) {
    const double contraction = std::pow(1.0 - cfg.alpha * t.a[d], power_mult * cfg.r);
    g[d] = t.a[d] * contraction * (theta[d] - t.b[d] / t.a[d]);
  }
  return ParamVector(std::move(g));
}

SuiteResult estimator_equivalence(const BilevelProblem& problem, const SuiteOptions& o) {
  SuiteBuilder s("estimator-equivalence");
  std::uint64_t item = 0;
  for (const auto& fam : families(50, 20)) {
    for (std::size_t i = 0; i < o.instances; ++i) {
      RngStream rng = suite_stream(o, 1, item++);
      const Instance in = fam.make(rng);
      const ParamVector stored = exact_grad_stored(problem, in.task, in.theta, in.cfg).gradient;
      const ParamVector rerun = exact_grad_rerun(problem, in.task, in.theta, in.cfg).gradient;
      const ParamVector ckpt = exact_grad_checkpointed(problem, in.task, in.theta, in.cfg).gradient;
      const std::size_t k = 1 + rng.index(static_cast<std::size_t>(in.cfg.r));
      const ParamVector ckpt_k = exact_grad_checkpointed(problem, in.task, in.theta, in.cfg, k).gradient;
      s.expect(bitwise_equal(stored, rerun) && bitwise_equal(stored, ckpt) && bitwise_equal(stored, ckpt_k),
               [&] { return fmt::format("{} #{}: exact estimators differ", fam.name, i); });
      if (const auto* q = std::get_if<QuadraticTask>(&in.task.payload())) {
        const ParamVector want_exact = quadratic_closed_form(*q, in.theta, in.cfg, 2);
        const ParamVector want_fo = quadratic_closed_form(*q, in.theta, in.cfg, 1);
        const ParamVector fo = fo_grad(problem, in.task, in.theta, in.cfg).gradient;
        const double e1 = rel_err(stored, want_exact, 1.0);
        const double e2 = rel_err(fo, want_fo, 1.0);
        s.expect(e1 < 1e-12 && e2 < 1e-12, [&] {
          return fmt::format("quadratic #{}: closed form mismatch (exact {:.3g}, fo {:.3g})", i, e1, e2);
        });
      }
    }
  }
  return s.finish("stored, recomputing and checkpointed gradients bitwise equal; quadratic closed forms match");
}

// A counterexample instance is usable for finite differences when every
// state the estimators touch stays clear of the branch points.
bool clear_of_breakpoints(const BilevelProblem& problem, const Instance& in, double margin) {
  const auto* ce = std::get_if<CounterexampleTask>(&in.task.payload());
  if (ce == nullptr) return true;
  const PiecewiseQuadratic f = ce->function();
  const RolloutResult roll = rollout(problem, in.task, in.theta, in.cfg, true);
  for (const auto& phi : roll.trajectory->states) {
    const double z = std::abs(phi[0] - f.center());
    if (std::abs(z - f.A) < margin || std::abs(z - f.A - 1.0) < margin) return false;
  }
  return true;
}

SuiteResult fd_gradient(const BilevelProblem& problem, const SuiteOptions& o) {
  SuiteBuilder s("fd-gradient");
  std::uint64_t item = 0;
  double worst = 0.0;
  for (const auto& fam : families(10, 10)) {
    std::size_t done = 0;
    while (done < o.fd_instances) {
      RngStream rng = suite_stream(o, 2, item++);
      const Instance in = fam.make(rng);
      if (!clear_of_breakpoints(problem, in, 1e-3)) continue;
      ++done;
      const auto objective = [&](const ParamVector& theta) {
        return problem.outer_loss(rollout(problem, in.task, theta, in.cfg, false).final_state, in.task);
      };
      const ParamVector fd = fd_grad(objective, in.theta);
      const ParamVector exact = exact_grad_stored(problem, in.task, in.theta, in.cfg).gradient;
      const double e = rel_err(exact, fd, 1e-2);
      worst = std::max(worst, e);
      s.expect(e < 1e-5, [&] { return fmt::format("{} #{}: rel err {:.3g}", fam.name, done, e); });
    }
  }
  return s.finish(fmt::format("worst rel err {:.3g}", worst));
}

SuiteResult fd_hvp_suite(const BilevelProblem& problem, const SuiteOptions& o) {
  SuiteBuilder s("fd-hvp");
  std::uint64_t item = 0;
  double worst = 0.0;
  for (const auto& fam : families(10, 10)) {
    std::size_t done = 0;
    while (done < o.fd_instances) {
      RngStream rng = suite_stream(o, 3, item++);
      Instance in = fam.make(rng);
      in.cfg = InnerLoopConfig(0.0, 1);  // only phi = theta is probed
      if (!clear_of_breakpoints(problem, in, 1e-3)) continue;
      ++done;
      const ParamVector dir = uniform_vector(rng, in.theta.size(), -1.0, 1.0);
      const auto grad = [&](const ParamVector& phi) { return problem.inner_grad(phi, in.task); };
      const ParamVector fd = fd_hvp(grad, in.theta, dir);
      const ParamVector hv = problem.inner_hvp(in.theta, in.task, dir);
      const double e = rel_err(hv, fd, 1e-2);
      worst = std::max(worst, e);
      s.expect(e < 1e-5, [&] { return fmt::format("{} #{}: rel err {:.3g}", fam.name, done, e); });
    }
  }
  return s.finish(fmt::format("worst rel err {:.3g}", worst));
}

SuiteResult unbiasedness(const BilevelProblem& problem, const SuiteOptions& o) {
  SuiteBuilder s("unbiasedness-enumeration");
  std::uint64_t item = 0;
  double worst = 0.0;
  for (const auto& fam : families(20, 20)) {
    for (std::size_t i = 0; i < o.instances; ++i) {
      RngStream rng = suite_stream(o, 4, item++);
      const Instance in = fam.make(rng);
      const double q = rng.uniform(0.01, 1.0);
      const ParamVector fo = fo_grad(problem, in.task, in.theta, in.cfg).gradient;
      const ParamVector exact = exact_grad_rerun(problem, in.task, in.theta, in.cfg).gradient;
      const ParamVector with = ufo_combine(fo, exact, q, true);
      const ParamVector without = ufo_combine(fo, exact, q, false);
      std::vector<double> mean(fo.size());
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] = (1.0 - q) * without[d] + q * with[d];
      const double e = rel_err(ParamVector(mean), exact, 1.0);
      worst = std::max(worst, e);
      s.expect(e < 1e-12, [&] { return fmt::format("{} #{}: q={} err {:.3g}", fam.name, i, q, e); });
    }
  }
  // Expectation over the two counterexample tasks and xi together.
  RngStream rng = suite_stream(o, 4, item++);
  for (std::size_t i = 0; i < o.instances; ++i) {
    const CounterexampleSpec spec = random_counterexample_spec(rng, 20);
    const FiniteTaskDistribution dist = counterexample_distribution(spec);
    const ParamVector theta{rng.uniform(-10.0, 30.0)};
    const InnerLoopConfig cfg(spec.alpha, spec.r);
    const double q = rng.uniform(0.01, 1.0);
    const ParamVector ufo =
        enumerate_expected_grad(problem, *dist.finite_support(), theta, cfg, EstimatorKind::ufo(q));
    const ParamVector exact =
        enumerate_expected_grad(problem, *dist.finite_support(), theta, cfg, EstimatorKind::exact_stored());
    // Rounding in the combined terms grows with the 1/q weight and the size
    // of the per-task gradients being mixed.
    double magnitude = 1.0;
    for (const auto& wt : *dist.finite_support()) {
      magnitude = std::max({magnitude, fo_grad(problem, wt.task, theta, cfg).gradient.norm(),
                            exact_grad_stored(problem, wt.task, theta, cfg).gradient.norm()});
    }
    const double e = (ufo - exact).norm() * q / magnitude;
    worst = std::max(worst, e);
    s.expect(e < 1e-12, [&] { return fmt::format("counterexample distribution #{}: err {:.3g}", i, e); });
  }
  return s.finish(fmt::format("worst err {:.3g}", worst));
}

SuiteResult ufo_q1_bitwise(const BilevelProblem& problem, const SuiteOptions& o) {
  SuiteBuilder s("ufo-q1-bitwise");
  std::uint64_t item = 0;
  for (const auto& fam : families(50, 20)) {
    for (std::size_t i = 0; i < o.instances; ++i) {
      RngStream rng = suite_stream(o, 5, item++);
      const Instance in = fam.make(rng);
      const GradientEstimate u = ufo_grad(problem, in.task, in.theta, in.cfg, 1.0, rng);
      const ParamVector exact = exact_grad_rerun(problem, in.task, in.theta, in.cfg).gradient;
      s.expect(u.meta.correction_taken == true && bitwise_equal(u.gradient, exact),
               [&] { return fmt::format("{} #{}: q=1 UFO differs from exact", fam.name, i); });
    }
  }
  return s.finish("q = 1 reproduces the exact gradient bitwise");
}

SuiteResult resource_laws(const BilevelProblem& problem, const SuiteOptions& o) {
  SuiteBuilder s("resource-laws");
  const CounterexampleSpec spec = CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06);
  const FiniteTaskDistribution dist = counterexample_distribution(spec);
  const InnerLoopConfig cfg(spec.alpha, spec.r);
  const std::vector<std::pair<EstimatorKind, UfoOptions>> kinds{
      {EstimatorKind::fo(), {}},
      {EstimatorKind::exact_stored(), {}},
      {EstimatorKind::exact_rerun(), {}},
      {EstimatorKind::exact_checkpointed(), {}},
      {EstimatorKind::ufo(0.2), {}},
      {EstimatorKind::ufo(0.2), {true}},
  };
  std::uint64_t kind_index = 0;
  std::vector<std::string> summary;
  for (const auto& [kind, options] : kinds) {
    std::vector<GradientEstimate> estimates;
    estimates.reserve(o.resource_calls);
    for (std::size_t i = 0; i < o.resource_calls; ++i) {
      RngStream rng = suite_stream(o, 6, kind_index * o.resource_calls + i);
      const TaskSpec task = dist.sample(rng);
      const ParamVector theta{rng.uniform(-10.0, 30.0)};
      estimates.push_back(estimate_gradient(problem, task, theta, cfg, kind, rng, options));
    }
    const ResourceReport rep = resource_report(estimates, kind, cfg, options);
    for (const auto& c : rep.checks) {
      s.expect(c.passed, [&] { return fmt::format("{}: {} ({})", kind.name(), c.name, c.detail); });
    }
    if (kind.type == EstimatorKind::Type::kUFO) {
      summary.push_back(fmt::format("{}{} freq {:.4f}", kind.name(), options.fused ? "-fused" : "",
                                    rep.correction_frequency));
    }
    ++kind_index;
  }
  std::string joined;
  for (const auto& x : summary) joined += (joined.empty() ? "" : "; ") + x;
  return s.finish(joined);
}

SuiteResult piecewise_regularity(const SuiteOptions& o) {
  SuiteBuilder s("piecewise-regularity");
  RngStream rng = suite_stream(o, 7, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const PiecewiseQuadratic f{rng.uniform(0.1, 3.0), rng.uniform(-5.0, 5.0), rng.uniform(0.5, 15.0)};
    for (double sign : {-1.0, 1.0}) {
      for (double z : {f.A, f.A + 1.0}) {
        const double x = f.center() + sign * z;
        const double below = x - sign * 1e-12;
        const double above = x + sign * 1e-12;
        const double dv = std::abs(piecewise_value(above, f) - piecewise_value(below, f));
        const double dg = std::abs(piecewise_grad(above, f) - piecewise_grad(below, f));
        const double dh = std::abs(piecewise_hess(above, f) - piecewise_hess(below, f));
        s.expect(dv < 1e-9 && dg < 1e-9 && dh < 1e-9, [&] {
          return fmt::format("a={} A={} z={}: jumps {:.3g} {:.3g} {:.3g}", f.a, f.A, z, dv, dg, dh);
        });
      }
    }
  }
  const PiecewiseQuadratic f{rng.uniform(0.1, 3.0), rng.uniform(-5.0, 5.0), rng.uniform(0.5, 15.0)};
  const double bound = piecewise_grad_bound(f);
  const double span = 3.0 * (f.A + 1.0);
  bool ok = true;
  std::string first;
  for (std::size_t i = 0; i < o.regularity_points; ++i) {
    const double x = f.center() + rng.uniform(-span, span);
    const double g = piecewise_grad(x, f);
    const double h = piecewise_hess(x, f);
    if (std::abs(g) > bound * (1.0 + 1e-12) || h < 0.0 || h > f.a * (1.0 + 1e-12)) {
      if (ok) first = fmt::format("x={}: f'={} f''={}", x, g, h);
      ok = false;
    }
  }
  s.expect(ok, [&] { return first; });
  return s.finish("f, f', f'' continuous at both joins; derivative bounds hold");
}

SuiteResult gap_identity(const SuiteOptions& o) {
  SuiteBuilder s("gap-identity");
  {
    const CounterexampleSpec spec = CounterexampleSpec::from_parameters(0.5, 1.5, 0.1, 10, 0.06);
    const CounterexampleConstants c = counterexample_constants(spec);
    const double e = std::abs(c.gap * c.gap - 0.12) / 0.12;
    s.expect(e < 1e-9 && c.interval_I.contains(c.x_star) && c.interval_I.contains(c.theta_star),
             [&] { return fmt::format("reference parameters: rel err {:.3g}", e); });
  }
  RngStream rng = suite_stream(o, 8, 0);
  for (std::size_t i = 0; i < o.instances; ++i) {
    const CounterexampleSpec spec = random_counterexample_spec(rng, 20);
    const CounterexampleConstants c = counterexample_constants(spec);
    const double e = std::abs(c.gap * c.gap - 2.0 * spec.D) / (2.0 * spec.D);
    s.expect(e < 1e-9, [&] { return fmt::format("#{}: rel err {:.3g}", i, e); });
  }
  return s.finish("gap^2 = 2D; x* and theta* inside the quadratic segment");
}

SuiteResult hvp_symmetry(const BilevelProblem& problem, const SuiteOptions& o) {
  SuiteBuilder s("hvp-symmetry-linearity");
  std::uint64_t item = 0;
  for (const auto& fam : families(50, 1)) {
    for (std::size_t i = 0; i < o.instances; ++i) {
      RngStream rng = suite_stream(o, 9, item++);
      const Instance in = fam.make(rng);
      const std::size_t p = in.theta.size();
      const ParamVector u = uniform_vector(rng, p, -1.0, 1.0);
      const ParamVector w = uniform_vector(rng, p, -1.0, 1.0);
      const double a = rng.uniform(-2.0, 2.0);
      const double b = rng.uniform(-2.0, 2.0);
      const ParamVector hu = problem.inner_hvp(in.theta, in.task, u);
      const ParamVector hw = problem.inner_hvp(in.theta, in.task, w);
      const double scale = std::max({1.0, hu.norm(), hw.norm()});
      const double sym = std::abs(u.dot(hw) - w.dot(hu)) / scale;
      const ParamVector lin = problem.inner_hvp(in.theta, in.task, a * u + b * w);
      const double lin_err = (lin - (a * hu + b * hw)).max_abs() / scale;
      s.expect(sym < 1e-12 && lin_err < 1e-12, [&] {
        return fmt::format("{} #{}: symmetry {:.3g}, linearity {:.3g}", fam.name, i, sym, lin_err);
      });
    }
  }
  return s.finish("HVPs symmetric and linear on every family");
}

}  // namespace

std::vector<SuiteResult> run_check_suites(const BilevelProblem& problem, const SuiteOptions& options) {
  std::vector<std::function<SuiteResult()>> suites{
      [&] { return estimator_equivalence(problem, options); },
      [&] { return fd_gradient(problem, options); },
      [&] { return fd_hvp_suite(problem, options); },
      [&] { return unbiasedness(problem, options); },
      [&] { return ufo_q1_bitwise(problem, options); },
      [&] { return resource_laws(problem, options); },
      [&] { return piecewise_regularity(options); },
      [&] { return gap_identity(options); },
      [&] { return hvp_symmetry(problem, options); },
  };
  const char* names[] = {"estimator-equivalence", "fd-gradient", "fd-hvp", "unbiasedness-enumeration",
                         "ufo-q1-bitwise", "resource-laws", "piecewise-regularity", "gap-identity",
                         "hvp-symmetry-linearity"};
  std::vector<SuiteResult> results;
  for (std::size_t i = 0; i < suites.size(); ++i) {
    try {
      results.push_back(suites[i]());
    } catch (const Error& e) {
      results.push_back({names[i], false, 0, std::string("exception: ") + e.what()});
    }
  }
  return results;
}

}  // namespace ufoblo::cli
