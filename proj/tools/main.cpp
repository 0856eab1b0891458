// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "experiments.hpp"
#include "ufoblo/errors.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::vector<long long> seeds;
  std::string out;
  std::string estimator;
  std::optional<double> q;
  std::optional<long long> tau;
  std::optional<long long> r;
  std::optional<double> alpha;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seeds, "seed (repeatable); replaces the configured seed list");
  cmd->add_option("--out", o.out, "CSV output path (default: stdout); metadata goes to PATH.meta.json");
  cmd->add_option("--estimator", o.estimator,
                  "fo, exact-stored, exact-rerun, exact-checkpointed or ufo (comma list allowed)");
  cmd->add_option("--q", o.q, "UFO correction probability in (0, 1]");
  cmd->add_option("--tau", o.tau, "outer iterations");
  cmd->add_option("--r", o.r, "inner GD steps");
  cmd->add_option("--alpha", o.alpha, "inner step size");
}

ufoblo::cli::ExperimentConfig resolve(const std::string& experiment, const Overrides& o) {
  using ufoblo::cli::format_double;
  auto config = ufoblo::cli::defaults_for(experiment);
  if (!o.config_path.empty()) ufoblo::cli::apply_config_file(config, o.config_path);
  if (!o.seeds.empty()) {
    std::string list;
    for (auto s : o.seeds) list += (list.empty() ? "" : ",") + std::to_string(s);
    config.set("seeds", list);
  }
  if (!o.out.empty()) config.set("out", o.out);
  if (!o.estimator.empty()) config.set("estimators", o.estimator);
  if (o.q) {
    config.set("q", format_double(*o.q));
    config.set("sweep_q", format_double(*o.q));
  }
  if (o.tau) config.set("tau", std::to_string(*o.tau));
  if (o.r) {
    config.set("r", std::to_string(*o.r));
    config.set("sweep_r", std::to_string(*o.r));
  }
  if (o.alpha) config.set("alpha", format_double(*o.alpha));
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel optimization estimators and experiments"};
  app.require_subcommand(1);

  Overrides overrides;
  using Command = int (*)(const ufoblo::cli::ExperimentConfig&, std::ostream&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"synthetic", "two-task counterexample: FO versus UFO trajectories", ufoblo::cli::cmd_synthetic},
      {"quadratic", "outer loop on diagonal quadratic tasks with rate check", ufoblo::cli::cmd_quadratic},
      {"fewshot-toy", "outer loop on sampled softmax-regression tasks", ufoblo::cli::cmd_fewshot_toy},
      {"sweep", "resource and accuracy table across estimators, r and q", ufoblo::cli::cmd_sweep},
      {"check", "run every property suite; exit 0 iff all pass", ufoblo::cli::cmd_check},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common_flags(cmd, overrides);
    subs.push_back(cmd);
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const auto& [name, help, fn] = commands[i];
    try {
      const auto config = resolve(name, overrides);
      if (config.output_path.empty()) return fn(config, std::cout, std::cerr);
      std::ofstream out(config.output_path, std::ios::binary);
      if (!out) {
        std::cerr << "error: cannot write '" << config.output_path << "'\n";
        return 1;
      }
      return fn(config, out, std::cerr);
    } catch (const ufoblo::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}
