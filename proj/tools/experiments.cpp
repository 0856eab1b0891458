// SPDX-License-Identifier: Apache-2.0
#include "experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "suites.hpp"
#include "ufoblo/diagnostics.hpp"
#include "ufoblo/errors.hpp"
#include "ufoblo/problems.hpp"

namespace ufoblo::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    if (used == text.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config '" + key + "': '" + text + "' is not a finite number");
}

long long parse_integer(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(text, &used);
    if (used == text.size()) return x;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config '" + key + "': '" + text + "' is not an integer");
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const long long x = parse_integer(key, text);
  if (x < 0) throw InvalidArgument("config '" + key + "': must be >= 0");
  return static_cast<std::size_t>(x);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw InvalidArgument("config '" + key + "': expected true/false");
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) values.push_back(parse_double(key, part));
  if (values.empty()) throw InvalidArgument("config '" + key + "': empty list");
  return values;
}

std::vector<std::string> estimator_list(const std::string& text) {
  std::vector<std::string> names = split(text, ',');
  if (names.empty()) throw InvalidArgument("config 'estimators': empty list");
  for (const auto& n : names) EstimatorKind::parse(n, 0.5);
  return names;
}

using Json = nlohmann::ordered_json;

void write_sidecar(const ExperimentConfig& config, const std::string& command, Json results) {
  if (config.output_path.empty()) return;
  Json doc;
  doc["command"] = command;
  Json cfg = Json::object();
  for (const auto& [k, v] : config.to_map()) cfg[k] = v;
  doc["config"] = std::move(cfg);
  doc["results"] = std::move(results);
  const std::string path = config.output_path + ".meta.json";
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write metadata file '" + path + "'");
  out << doc.dump(2) << '\n';
}

std::vector<TaskSpec> quadratic_tasks(const ExperimentConfig& config) {
  const auto as = split(config.quad_a, ';');
  const auto bs = split(config.quad_b, ';');
  if (as.size() != bs.size()) {
    throw InvalidArgument("config: quad_a and quad_b list different numbers of tasks");
  }
  std::vector<TaskSpec> tasks;
  for (std::size_t i = 0; i < as.size(); ++i) {
    QuadraticTask t{parse_doubles("quad_a", as[i]), parse_doubles("quad_b", bs[i])};
    tasks.emplace_back(std::move(t));
    if (tasks.back().dim() != tasks.front().dim()) {
      throw InvalidArgument("config: quadratic tasks must share one dimension");
    }
  }
  return tasks;
}

std::variant<ParamVector, UniformInit> theta0_for(const ExperimentConfig& config, std::size_t dim) {
  if (config.theta0.rfind("uniform:", 0) == 0) {
    const auto parts = split(config.theta0, ':');
    if (parts.size() != 3) throw InvalidArgument("config 'theta0': expected uniform:LO:HI");
    return UniformInit{parse_double("theta0", parts[1]), parse_double("theta0", parts[2]), dim};
  }
  const std::vector<double> values = parse_doubles("theta0", config.theta0);
  if (values.size() == 1) return ParamVector::filled(dim, values[0]);
  if (values.size() != dim) {
    throw DimensionMismatch("config 'theta0': " + std::to_string(values.size()) +
                            " values for dimension " + std::to_string(dim));
  }
  return ParamVector(values);
}

RunConfig run_config_for(const ExperimentConfig& config, const std::string& estimator,
                         std::uint64_t seed, std::size_t dim) {
  RunConfig rc;
  rc.tau = config.tau;
  rc.v = config.v;
  rc.estimator = EstimatorKind::parse(estimator, config.q);
  rc.schedule = StepSchedule::parse(config.schedule);
  rc.clip_bound = config.clip;
  rc.seed = seed;
  rc.theta0 = theta0_for(config, dim);
  rc.inner = InnerLoopConfig(config.alpha, config.r);
  rc.ufo_options.fused = config.fused;
  rc.monitor.every = config.monitor_every;
  rc.monitor.mc_tasks = config.mc_tasks;
  return rc;
}

std::string join_theta(const ParamVector& theta) {
  std::vector<std::string> parts;
  for (double x : theta.values()) parts.push_back(format_double(x));
  return join(parts, ";");
}

std::string opt(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

// Generic trajectory rows shared by the quadratic and few-shot commands.
constexpr const char* kTrajectoryHeader =
    "row_type,seed,estimator,k,gamma_k,theta,grad_M_norm,grad_M_estimated,min_grad_M_sq_so_far,"
    "inner_grad_evals,outer_grad_evals,hvp_evals,peak_cached_states,corrections,"
    "rate_head_max,rate_tail_max,rate_consistent\n";

Json write_trajectory(std::ostream& out, std::uint64_t seed, const std::string& estimator,
                      const Trajectory& traj, std::size_t tau) {
  double min_sq = std::numeric_limits<double>::infinity();
  std::vector<double> norms;
  bool all_monitored = true;
  for (const auto& it : traj.iterates) {
    std::optional<double> min_col;
    if (it.grad_m_norm) {
      min_sq = std::min(min_sq, *it.grad_m_norm * *it.grad_m_norm);
      min_col = min_sq;
      norms.push_back(*it.grad_m_norm);
    } else {
      all_monitored = false;
    }
    out << fmt::format("iter,{},{},{},{},{},{},{},{},{},{},{},{},{},,,\n", seed, estimator, it.k,
                       it.k == 0 ? std::string() : format_double(it.gamma), join_theta(it.theta),
                       opt(it.grad_m_norm), it.grad_m_norm ? (it.grad_m_estimated ? "1" : "0") : "",
                       opt(min_col), it.evals.inner_grad_evals, it.evals.outer_grad_evals,
                       it.evals.hvp_evals, it.peak_cached_states, it.corrections);
  }
  Json res;
  res["seed"] = seed;
  res["estimator"] = estimator;
  res["failed"] = traj.failed;
  if (traj.failed) res["failure"] = traj.failure;
  if (tau == 0) return res;

  std::optional<RateReport> rate;
  if (traj.schedule.kind == StepSchedule::Kind::kInverseSqrt && all_monitored && !norms.empty()) {
    rate = rate_check(traj, norms);
    res["rate_verdict"] = rate->verdict;
    res["rate_consistent"] = rate->consistent;
  }
  const auto& last = traj.iterates.back();
  out << fmt::format("summary,{},{},{},,{},{},,{},,,,,,{},{},{}\n", seed, estimator, last.k,
                     join_theta(last.theta), opt(last.grad_m_norm),
                     std::isfinite(min_sq) ? format_double(min_sq) : std::string(),
                     rate ? format_double(rate->head_max) : std::string(),
                     rate ? format_double(rate->tail_max) : std::string(),
                     rate ? (rate->consistent ? "1" : "0") : "");
  if (std::isfinite(min_sq)) res["min_grad_M_sq"] = min_sq;
  return res;
}

}  // namespace

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "experiment") {
    if (value != experiment) {
      throw InvalidArgument("config 'experiment' = '" + value + "' does not match command '" +
                            experiment + "'");
    }
  } else if (key == "tau") {
    tau = parse_count(key, value);
  } else if (key == "v") {
    v = parse_count(key, value);
  } else if (key == "estimator" || key == "estimators") {
    estimators = estimator_list(value);
  } else if (key == "q") {
    q = parse_double(key, value);
  } else if (key == "fused") {
    fused = parse_bool(key, value);
  } else if (key == "schedule") {
    schedule = value;
  } else if (key == "clip") {
    if (value == "none" || value.empty()) {
      clip.reset();
    } else {
      clip = parse_double(key, value);
    }
  } else if (key == "theta0") {
    theta0 = value;
  } else if (key == "alpha") {
    alpha = parse_double(key, value);
  } else if (key == "r") {
    const long long x = parse_integer(key, value);
    if (x < 1 || x > std::numeric_limits<int>::max()) throw InvalidArgument("config 'r': must be >= 1");
    r = static_cast<int>(x);
  } else if (key == "monitor_every") {
    monitor_every = parse_count(key, value);
  } else if (key == "mc_tasks") {
    mc_tasks = parse_count(key, value);
  } else if (key == "seeds" || key == "seed") {
    seeds.clear();
    for (const auto& part : split(value, ',')) {
      const long long s = parse_integer(key, part);
      if (s < 0) throw InvalidArgument("config 'seeds': seeds must be >= 0");
      seeds.push_back(static_cast<std::uint64_t>(s));
    }
  } else if (key == "out") {
    output_path = value;
  } else if (key == "a1") {
    a1 = parse_double(key, value);
  } else if (key == "a2") {
    a2 = parse_double(key, value);
  } else if (key == "D") {
    D = parse_double(key, value);
  } else if (key == "A") {
    if (value == "auto" || value.empty()) {
      A.reset();
    } else {
      A = parse_double(key, value);
    }
  } else if (key == "ufo_threshold") {
    ufo_threshold = parse_double(key, value);
  } else if (key == "quad_a") {
    quad_a = value;
  } else if (key == "quad_b") {
    quad_b = value;
  } else if (key == "fewshot_n") {
    fewshot.n = parse_count(key, value);
  } else if (key == "fewshot_m") {
    fewshot.m = parse_count(key, value);
  } else if (key == "fewshot_shots") {
    fewshot.shots = parse_count(key, value);
  } else if (key == "fewshot_test_per_class") {
    fewshot.test_per_class = parse_count(key, value);
  } else if (key == "fewshot_separation") {
    fewshot.separation = parse_double(key, value);
  } else if (key == "sweep_r") {
    sweep_r.clear();
    for (const auto& part : split(value, ',')) {
      const long long x = parse_integer(key, part);
      if (x < 1 || x > std::numeric_limits<int>::max()) throw InvalidArgument("config 'sweep_r': must be >= 1");
      sweep_r.push_back(static_cast<int>(x));
    }
  } else if (key == "sweep_q") {
    if (value != "inv-r") parse_doubles(key, value);
    sweep_q = value;
  } else if (key == "sweep_calls") {
    sweep_calls = parse_count(key, value);
  } else {
    throw InvalidArgument("config: unknown key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw InvalidArgument("config: at least one seed is required");
  if (v == 0) throw InvalidArgument("config 'v': must be >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("config 'q': must lie in (0, 1]");
  if (clip && !(*clip > 0.0)) throw InvalidArgument("config 'clip': must be > 0");
  if (!(alpha >= 0.0)) throw InvalidArgument("config 'alpha': must be >= 0");
  for (const auto& name : estimators) EstimatorKind::parse(name, q);
  StepSchedule::parse(schedule);
  theta0_for(*this, 1);
  if (sweep_calls == 0) throw InvalidArgument("config 'sweep_calls': must be >= 1");
  if (sweep_q != "inv-r") {
    for (double x : parse_doubles("sweep_q", sweep_q)) {
      if (!(x > 0.0 && x <= 1.0)) throw InvalidArgument("config 'sweep_q': values must lie in (0, 1]");
    }
  }
  if (experiment == "fewshot-toy") fewshot.validate();
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::vector<std::string> seed_text;
  for (auto s : seeds) seed_text.push_back(std::to_string(s));
  std::vector<std::string> r_text;
  for (int x : sweep_r) r_text.push_back(std::to_string(x));
  return {
      {"experiment", experiment},
      {"tau", std::to_string(tau)},
      {"v", std::to_string(v)},
      {"estimators", join(estimators, ",")},
      {"q", format_double(q)},
      {"fused", fused ? "true" : "false"},
      {"schedule", schedule},
      {"clip", clip ? format_double(*clip) : "none"},
      {"theta0", theta0},
      {"alpha", format_double(alpha)},
      {"r", std::to_string(r)},
      {"monitor_every", std::to_string(monitor_every)},
      {"mc_tasks", std::to_string(mc_tasks)},
      {"seeds", join(seed_text, ",")},
      {"a1", format_double(a1)},
      {"a2", format_double(a2)},
      {"D", format_double(D)},
      {"A", A ? format_double(*A) : "auto"},
      {"ufo_threshold", format_double(ufo_threshold)},
      {"quad_a", quad_a},
      {"quad_b", quad_b},
      {"fewshot_n", std::to_string(fewshot.n)},
      {"fewshot_m", std::to_string(fewshot.m)},
      {"fewshot_shots", std::to_string(fewshot.shots)},
      {"fewshot_test_per_class", std::to_string(fewshot.test_per_class)},
      {"fewshot_separation", format_double(fewshot.separation)},
      {"sweep_r", join(r_text, ",")},
      {"sweep_q", sweep_q},
      {"sweep_calls", std::to_string(sweep_calls)},
  };
}

ExperimentConfig defaults_for(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "synthetic") return c;
  if (experiment == "quadratic") {
    c.estimators = {"exact-stored"};
    c.schedule = "inverse-sqrt";
    c.theta0 = "10";
    c.r = 5;
    c.seeds = {0};
    return c;
  }
  if (experiment == "fewshot-toy") {
    c.tau = 300;
    c.v = 4;
    c.estimators = {"fo", "ufo"};
    c.q = 0.2;
    c.schedule = "constant:0.5";
    c.clip = 10.0;
    c.theta0 = "uniform:-0.1:0.1";
    c.alpha = 0.5;
    c.r = 5;
    c.monitor_every = 10;
    c.mc_tasks = 32;
    c.seeds = {0};
    return c;
  }
  if (experiment == "sweep") {
    c.estimators = {"fo", "exact-stored", "exact-rerun", "exact-checkpointed", "ufo"};
    c.seeds = {0};
    return c;
  }
  if (experiment == "check") {
    c.seeds = {0};
    return c;
  }
  throw InvalidArgument("unknown experiment '" + experiment + "'");
}

void apply_config_stream(ExperimentConfig& config, std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config file '" + path + "'");
  apply_config_stream(config, in, path);
}

int cmd_synthetic(const ExperimentConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  const CounterexampleSpec spec =
      CounterexampleSpec::from_parameters(config.a1, config.a2, config.alpha, config.r, config.D, config.A);
  const CounterexampleConstants consts = counterexample_constants(spec);
  const FiniteTaskDistribution dist = counterexample_distribution(spec);
  const auto support = *dist.finite_support();
  const AnalyticProblem problem;
  const double sqrt_2d = std::sqrt(2.0 * config.D);

  out << "row_type,seed,estimator,k,gamma_k,theta,grad_M_exact,grad_M_sq,min_grad_M_sq_so_far,"
         "correction_taken,x_star,theta_star,sqrt_2D,tail_mean_grad_M_sq,min_abs_grad_M\n";

  Json runs = Json::array();
  std::map<std::string, std::vector<double>> tail_means;
  std::map<std::string, std::vector<double>> min_abs;
  bool any_failed = false;

  for (std::uint64_t seed : config.seeds) {
    for (const auto& name : config.estimators) {
      RunConfig rc = run_config_for(config, name, seed, 1);
      rc.monitor.every = 0;  // the exact gradient is evaluated below, with its sign
      const bool is_ufo = rc.estimator.type == EstimatorKind::Type::kUFO;

      Trajectory traj;
      if (config.tau == 0) {
        IterateRecord start;
        start.theta = initial_theta(rc);
        traj.iterates.push_back(std::move(start));
      } else {
        traj = run_minibatch_gd(problem, dist, rc);
      }

      double min_sq = std::numeric_limits<double>::infinity();
      double tail_sum = 0.0;
      std::size_t tail_count = 0;
      const std::size_t tail_start = config.tau - config.tau / 10;
      std::size_t corrections = 0;
      double last_grad = 0.0;
      for (const auto& it : traj.iterates) {
        const double g = meta_grad_exact(problem, support, it.theta, rc.inner)[0];
        const double g2 = g * g;
        last_grad = g;
        min_sq = std::min(min_sq, g2);
        if (it.k > tail_start || config.tau == 0) {
          tail_sum += g2;
          ++tail_count;
        }
        corrections += it.corrections;
        const std::string corr = (is_ufo && it.k > 0) ? std::to_string(it.corrections) : "";
        out << fmt::format("iter,{},{},{},{},{},{},{},{},{},,,,,\n", seed, name, it.k,
                           it.k == 0 ? std::string() : format_double(it.gamma),
                           format_double(it.theta[0]), format_double(g), format_double(g2),
                           format_double(min_sq), corr);
      }
      const double tail_mean = tail_sum / static_cast<double>(tail_count);
      Json run;
      run["seed"] = seed;
      run["estimator"] = name;
      run["failed"] = traj.failed;
      if (traj.failed) {
        run["failure"] = traj.failure;
        any_failed = true;
        log << "seed " << seed << " " << name << ": " << traj.failure << '\n';
      }
      run["tail_mean_grad_M_sq"] = tail_mean;
      run["min_abs_grad_M"] = std::sqrt(min_sq);
      runs.push_back(std::move(run));
      tail_means[name].push_back(tail_mean);
      min_abs[name].push_back(std::sqrt(min_sq));
      if (config.tau == 0) continue;

      const auto& last = traj.iterates.back();
      out << fmt::format("summary,{},{},{},,{},{},{},{},{},{},{},{},{},{}\n", seed, name, last.k,
                         format_double(last.theta[0]), format_double(last_grad),
                         format_double(last_grad * last_grad), format_double(min_sq),
                         is_ufo ? std::to_string(corrections) : std::string(),
                         format_double(consts.x_star), format_double(consts.theta_star),
                         format_double(sqrt_2d), format_double(tail_mean),
                         format_double(std::sqrt(min_sq)));
    }
  }

  Json results;
  results["x_star"] = consts.x_star;
  results["theta_star"] = consts.theta_star;
  results["sqrt_2D"] = sqrt_2d;
  results["b2"] = spec.b2;
  results["A"] = spec.A;
  results["interval_I"] = {consts.interval_I.lo, consts.interval_I.hi};
  results["ufo_threshold"] = config.ufo_threshold;
  results["fo_tail_window"] = "final 10% of iterations";
  for (const auto& [name, values] : tail_means) {
    double sum = 0.0;
    for (double x : values) sum += x;
    results["seed_mean_tail_grad_M_sq"][name] = sum / static_cast<double>(values.size());
  }
  for (const auto& [name, values] : min_abs) {
    const auto below = std::count_if(values.begin(), values.end(),
                                     [&](double x) { return x < config.ufo_threshold; });
    results["seeds_below_threshold"][name] = below;
  }
  results["runs"] = std::move(runs);
  for (const auto& [name, mean] : results["seed_mean_tail_grad_M_sq"].items()) {
    log << fmt::format("{}: seed-mean tail |grad M|^2 = {:.6g}, seeds with min |grad M| < {} : {}/{}\n",
                       name, mean.get<double>(), config.ufo_threshold,
                       results["seeds_below_threshold"][name].get<long long>(), config.seeds.size());
  }
  write_sidecar(config, "synthetic", std::move(results));
  return any_failed ? 2 : 0;
}

int cmd_quadratic(const ExperimentConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  const FiniteTaskDistribution dist = FiniteTaskDistribution::equiprobable(quadratic_tasks(config));
  const std::size_t dim = dist.finite_support()->front().task.dim();
  const AnalyticProblem problem;
  out << kTrajectoryHeader;
  Json runs = Json::array();
  bool any_failed = false;
  for (std::uint64_t seed : config.seeds) {
    for (const auto& name : config.estimators) {
      const RunConfig rc = run_config_for(config, name, seed, dim);
      Trajectory traj;
      if (config.tau == 0) {
        IterateRecord start;
        start.theta = initial_theta(rc);
        start.grad_m_norm = meta_grad_exact(problem, *dist.finite_support(), start.theta, rc.inner).norm();
        traj.iterates.push_back(std::move(start));
        traj.schedule = rc.schedule;
      } else {
        traj = run_minibatch_gd(problem, dist, rc);
      }
      Json res = write_trajectory(out, seed, name, traj, config.tau);
      if (res.contains("rate_verdict")) {
        log << fmt::format("seed {} {}: {}\n", seed, name, res["rate_verdict"].get<std::string>());
      }
      if (traj.failed) {
        any_failed = true;
        log << "seed " << seed << " " << name << ": " << traj.failure << '\n';
      }
      runs.push_back(std::move(res));
    }
  }
  write_sidecar(config, "quadratic", Json{{"runs", std::move(runs)}});
  return any_failed ? 2 : 0;
}

int cmd_fewshot_toy(const ExperimentConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  const FewShotTaskDistribution dist(config.fewshot);
  const std::size_t dim = config.fewshot.n * config.fewshot.m;
  const AnalyticProblem problem;
  out << kTrajectoryHeader;
  Json runs = Json::array();
  bool any_failed = false;
  for (std::uint64_t seed : config.seeds) {
    for (const auto& name : config.estimators) {
      const RunConfig rc = run_config_for(config, name, seed, dim);
      Trajectory traj;
      if (config.tau == 0) {
        IterateRecord start;
        start.theta = initial_theta(rc);
        traj.iterates.push_back(std::move(start));
        traj.schedule = rc.schedule;
      } else {
        traj = run_minibatch_gd(problem, dist, rc);
      }
      Json res = write_trajectory(out, seed, name, traj, config.tau);
      res["grad_M_estimated"] = "Monte-Carlo average of exact gradients over mc_tasks sampled tasks";
      if (traj.failed) {
        any_failed = true;
        log << "seed " << seed << " " << name << ": " << traj.failure << '\n';
      }
      runs.push_back(std::move(res));
    }
  }
  write_sidecar(config, "fewshot-toy", Json{{"runs", std::move(runs)}});
  return any_failed ? 2 : 0;
}

int cmd_sweep(const ExperimentConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  const AnalyticProblem problem;
  const std::uint64_t seed = config.seeds.front();
  out << "estimator,r,q,calls,mean_inner_grad_evals,expected_inner_grad_evals,mean_outer_grad_evals,"
         "mean_hvp_evals,max_peak_cached_states,correction_frequency,mean_abs_error,max_abs_error,"
         "bias_norm,resource_checks_passed\n";
  Json cells = Json::array();
  bool all_passed = true;

  for (int r : config.sweep_r) {
    const CounterexampleSpec spec =
        CounterexampleSpec::from_parameters(config.a1, config.a2, config.alpha, r, config.D, config.A);
    const FiniteTaskDistribution dist = counterexample_distribution(spec);
    const InnerLoopConfig inner(config.alpha, r);
    const auto theta0 = theta0_for(config, 1);

    // Shared draws so every estimator sees the same (task, theta) sequence.
    std::vector<TaskSpec> tasks;
    std::vector<ParamVector> thetas;
    std::vector<ParamVector> exact;
    tasks.reserve(config.sweep_calls);
    for (std::size_t i = 0; i < config.sweep_calls; ++i) {
      RngStream rng = RngStream::substream(seed, StreamPurpose::kProblemSetup,
                                           static_cast<std::uint64_t>(r), i);
      tasks.push_back(dist.sample(rng));
      if (const auto* u = std::get_if<UniformInit>(&theta0)) {
        thetas.push_back(ParamVector{rng.uniform(u->lo, u->hi)});
      } else {
        thetas.push_back(std::get<ParamVector>(theta0));
      }
      exact.push_back(exact_grad_stored(problem, tasks.back(), thetas.back(), inner).gradient);
    }

    std::vector<double> qs;
    if (config.sweep_q == "inv-r") {
      qs.push_back(1.0 / static_cast<double>(r));
    } else {
      qs = parse_doubles("sweep_q", config.sweep_q);
    }

    for (const auto& name : config.estimators) {
      const bool is_ufo = EstimatorKind::parse(name, 0.5).type == EstimatorKind::Type::kUFO;
      const std::vector<double> cell_qs = is_ufo ? qs : std::vector<double>{1.0};
      for (double q : cell_qs) {
        const EstimatorKind kind = EstimatorKind::parse(name, q);
        std::vector<GradientEstimate> estimates;
        estimates.reserve(config.sweep_calls);
        double err_sum = 0.0;
        double err_max = 0.0;
        std::vector<double> bias(1, 0.0);
        for (std::size_t i = 0; i < config.sweep_calls; ++i) {
          RngStream rng = RngStream::substream(seed, StreamPurpose::kBatchSlot,
                                               static_cast<std::uint64_t>(r), i);
          GradientEstimate est = estimate_gradient(problem, tasks[i], thetas[i], inner, kind, rng,
                                                   UfoOptions{config.fused});
          const ParamVector diff = est.gradient - exact[i];
          err_sum += diff.norm();
          err_max = std::max(err_max, diff.norm());
          bias[0] += diff[0];
          estimates.push_back(std::move(est));
        }
        const auto calls = static_cast<double>(config.sweep_calls);
        const ResourceReport rep = resource_report(estimates, kind, inner, UfoOptions{config.fused});
        all_passed = all_passed && rep.all_passed();

        const double rd = r;
        const double rerun_extra = rd + rd * (rd - 1.0) / 2.0;
        double expected = rd;
        switch (kind.type) {
          case EstimatorKind::Type::kFO:
          case EstimatorKind::Type::kExactStored:
            break;
          case EstimatorKind::Type::kExactRerun:
            expected = rerun_extra;
            break;
          case EstimatorKind::Type::kExactCheckpointed:
            // Each of the K segments replays all but its first state.
            expected = 2.0 * rd - static_cast<double>(default_checkpoint_count(r));
            break;
          case EstimatorKind::Type::kUFO:
            expected = rd + q * (config.fused ? rd * (rd - 1.0) / 2.0 : rerun_extra);
            break;
        }
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", name, r,
                           is_ufo ? format_double(q) : std::string(), config.sweep_calls,
                           format_double(rep.mean_inner_grad_evals), format_double(expected),
                           format_double(rep.mean_outer_grad_evals), format_double(rep.mean_hvp_evals),
                           rep.max_peak_cached_states,
                           is_ufo ? format_double(rep.correction_frequency) : std::string(),
                           format_double(err_sum / calls), format_double(err_max),
                           format_double(std::abs(bias[0]) / calls), rep.all_passed() ? 1 : 0);
        Json cell;
        cell["estimator"] = name;
        cell["r"] = r;
        if (is_ufo) cell["q"] = q;
        Json checks = Json::array();
        for (const auto& c : rep.checks) {
          checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
          if (!c.passed) log << fmt::format("r={} {}: {} failed ({})\n", r, name, c.name, c.detail);
        }
        cell["checks"] = std::move(checks);
        cells.push_back(std::move(cell));
      }
    }
  }
  write_sidecar(config, "sweep", Json{{"cells", std::move(cells)}, {"all_checks_passed", all_passed}});
  return 0;
}

int cmd_check(const ExperimentConfig& config, std::ostream& out, std::ostream& log) {
  config.validate();
  SuiteOptions options;
  options.seed = config.seeds.front();
  const AnalyticProblem problem;
  const std::vector<SuiteResult> results = run_check_suites(problem, options);
  out << "suite,passed,cases,detail\n";
  Json suites = Json::array();
  std::vector<std::string> failed;
  for (const auto& s : results) {
    std::string detail = s.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    out << fmt::format("{},{},{},{}\n", s.name, s.passed ? 1 : 0, s.cases, detail);
    suites.push_back({{"name", s.name}, {"passed", s.passed}, {"cases", s.cases}, {"detail", s.detail}});
    if (!s.passed) failed.push_back(s.name);
  }
  write_sidecar(config, "check", Json{{"suites", std::move(suites)}});
  if (!failed.empty()) {
    log << "failed suites: " << join(failed, ", ") << '\n';
    return 1;
  }
  log << "all " << results.size() << " suites passed\n";
  return 0;
}

}  // namespace ufoblo::cli
