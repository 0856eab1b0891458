// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <variant>

#include "ufoblo/counterexample.hpp"
#include "ufoblo/logistic.hpp"
#include "ufoblo/quadratic.hpp"

namespace ufoblo {

enum class TaskFamily { kQuadratic, kCounterexample, kFewShotLogistic };

std::string_view to_string(TaskFamily family);

/// One task drawn from a task distribution; the payload is validated on construction.
class TaskSpec {
 public:
  using Payload = std::variant<QuadraticTask, CounterexampleTask, FewShotLogisticTask>;

  explicit TaskSpec(QuadraticTask task);
  explicit TaskSpec(CounterexampleTask task);
  explicit TaskSpec(FewShotLogisticTask task);

  TaskFamily family() const noexcept;
  const Payload& payload() const noexcept { return payload_; }
  /// Parameter dimension p implied by the payload.
  std::size_t dim() const;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;

 private:
  Payload payload_;
};

}  // namespace ufoblo
