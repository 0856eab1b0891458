// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/task.hpp"

#include "ufoblo/errors.hpp"

namespace ufoblo {

std::string_view to_string(TaskFamily family) {
  switch (family) {
    case TaskFamily::kQuadratic:
      return "quadratic";
    case TaskFamily::kCounterexample:
      return "counterexample";
    case TaskFamily::kFewShotLogistic:
      return "fewshot-logistic";
  }
  return "unknown";
}

TaskSpec::TaskSpec(QuadraticTask task) : payload_(std::move(task)) {
  std::get<QuadraticTask>(payload_).validate();
}

TaskSpec::TaskSpec(CounterexampleTask task) : payload_(std::move(task)) {
  const auto& t = std::get<CounterexampleTask>(payload_);
  t.spec.validate();
  if (t.index != 1 && t.index != 2) throw InvalidArgument("CounterexampleTask: index must be 1 or 2");
  if (t.dim == 0) throw InvalidArgument("CounterexampleTask: dim must be >= 1");
}

TaskSpec::TaskSpec(FewShotLogisticTask task) : payload_(std::move(task)) {
  std::get<FewShotLogisticTask>(payload_).validate();
}

TaskFamily TaskSpec::family() const noexcept {
  switch (payload_.index()) {
    case 0:
      return TaskFamily::kQuadratic;
    case 1:
      return TaskFamily::kCounterexample;
    default:
      return TaskFamily::kFewShotLogistic;
  }
}

std::size_t TaskSpec::dim() const {
  return std::visit(
      [](const auto& t) -> std::size_t {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, CounterexampleTask>) {
          return t.dim;
        } else {
          return t.dim();
        }
      },
      payload_);
}

}  // namespace ufoblo
