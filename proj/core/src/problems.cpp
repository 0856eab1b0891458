// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/problems.hpp"

#include <string>
#include <type_traits>

#include "ufoblo/errors.hpp"
#include "ufoblo/piecewise.hpp"

namespace ufoblo {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

void check_dim(const ParamVector& v, const TaskSpec& task, const char* what) {
  if (v.size() != task.dim()) {
    throw DimensionMismatch(std::string(what) + ": expected length " + std::to_string(task.dim()) +
                            ", got " + std::to_string(v.size()));
  }
}

// Vector whose first entry is `head` and the rest zero.
ParamVector first_coordinate(std::size_t dim, double head) {
  std::vector<double> out(dim, 0.0);
  out[0] = head;
  return ParamVector(std::move(out));
}

double loss(const ParamVector& phi, const TaskSpec& task, Split split) {
  check_dim(phi, task, "loss");
  return std::visit(
      Overloaded{[&](const QuadraticTask& t) { return t.loss(phi); },
                 [&](const CounterexampleTask& t) { return piecewise_value(phi[0], t.function()); },
                 [&](const FewShotLogisticTask& t) { return logistic_loss(phi, t, split); }},
      task.payload());
}

ParamVector grad(const ParamVector& phi, const TaskSpec& task, Split split) {
  check_dim(phi, task, "grad");
  return std::visit(Overloaded{[&](const QuadraticTask& t) { return t.grad(phi); },
                               [&](const CounterexampleTask& t) {
                                 return first_coordinate(t.dim, piecewise_grad(phi[0], t.function()));
                               },
                               [&](const FewShotLogisticTask& t) { return logistic_grad(phi, t, split); }},
                    task.payload());
}

}  // namespace

double AnalyticProblem::inner_loss(const ParamVector& phi, const TaskSpec& task) const {
  return loss(phi, task, Split::kTrain);
}

double AnalyticProblem::outer_loss(const ParamVector& phi, const TaskSpec& task) const {
  return loss(phi, task, Split::kTest);
}

ParamVector AnalyticProblem::inner_grad(const ParamVector& phi, const TaskSpec& task) const {
  return grad(phi, task, Split::kTrain);
}

ParamVector AnalyticProblem::outer_grad(const ParamVector& phi, const TaskSpec& task) const {
  return grad(phi, task, Split::kTest);
}

ParamVector AnalyticProblem::inner_hvp(const ParamVector& phi, const TaskSpec& task,
                                       const ParamVector& dir) const {
  check_dim(phi, task, "inner_hvp");
  check_dim(dir, task, "inner_hvp direction");
  return std::visit(
      Overloaded{[&](const QuadraticTask& t) { return t.hvp(dir); },
                 [&](const CounterexampleTask& t) {
                   return first_coordinate(t.dim, piecewise_hess(phi[0], t.function()) * dir[0]);
                 },
                 [&](const FewShotLogisticTask& t) { return logistic_inner_hvp(phi, t, dir); }},
      task.payload());
}

FiniteTaskDistribution counterexample_distribution(const CounterexampleSpec& spec, std::size_t dim) {
  return FiniteTaskDistribution({{TaskSpec(CounterexampleTask{spec, 1, dim}), 0.5},
                                 {TaskSpec(CounterexampleTask{spec, 2, dim}), 0.5}});
}

FewShotTaskDistribution::FewShotTaskDistribution(FewShotConfig config) : config_(config) {
  config_.validate();
}

TaskSpec FewShotTaskDistribution::sample(RngStream& rng) const {
  return TaskSpec(sample_fewshot_task(config_, rng));
}

}  // namespace ufoblo
