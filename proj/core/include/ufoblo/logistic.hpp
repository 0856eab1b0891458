// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ufoblo/param_vector.hpp"
#include "ufoblo/rng.hpp"

namespace ufoblo {

/// Labelled examples stored row-major: inputs is count x n, labels count x m.
struct LabelledSplit {
  std::vector<double> inputs;
  std::vector<double> labels;  ///< one-hot rows

  friend bool operator==(const LabelledSplit&, const LabelledSplit&) = default;
};

/// Few-shot classification task for a linear softmax model.
///
/// Parameters are the m x n weight matrix W flattened row-major
/// (phi[c * n + d] = W_{c,d}); logits are Z = W x. The inner loss is the mean
/// categorical cross-entropy on the train split, the outer loss the same on
/// the test split.
struct FewShotLogisticTask {
  std::size_t n = 0;  ///< input dimension
  std::size_t m = 0;  ///< number of classes
  LabelledSplit train;
  LabelledSplit test;

  void validate() const;
  std::size_t dim() const { return m * n; }
  std::size_t train_size() const { return n == 0 ? 0 : train.inputs.size() / n; }
  std::size_t test_size() const { return n == 0 ? 0 : test.inputs.size() / n; }

  friend bool operator==(const FewShotLogisticTask&, const FewShotLogisticTask&) = default;
};

enum class Split { kTrain, kTest };

/// log(sum_c exp(Z_c)) - Z^T Y with max-subtraction.
double cce_loss(std::span<const double> logits, std::span<const double> label);

double logistic_loss(const ParamVector& phi, const FewShotLogisticTask& task, Split split);
ParamVector logistic_grad(const ParamVector& phi, const FewShotLogisticTask& task, Split split);
/// Mean over the split of x x^T (kron) (diag(s) - s s^T) applied to dir.
ParamVector logistic_hvp(const ParamVector& phi, const FewShotLogisticTask& task, Split split,
                         const ParamVector& dir);

inline ParamVector logistic_inner_grad(const ParamVector& phi, const FewShotLogisticTask& task) {
  return logistic_grad(phi, task, Split::kTrain);
}
inline ParamVector logistic_outer_grad(const ParamVector& phi, const FewShotLogisticTask& task) {
  return logistic_grad(phi, task, Split::kTest);
}
inline ParamVector logistic_inner_hvp(const ParamVector& phi, const FewShotLogisticTask& task,
                                      const ParamVector& dir) {
  return logistic_hvp(phi, task, Split::kTrain, dir);
}

/// Synthetic task generator: class means ~ N(0, separation^2 I), inputs are
/// mean + N(0, I).
struct FewShotConfig {
  std::size_t n = 4;
  std::size_t m = 3;
  std::size_t shots = 2;           ///< train examples per class
  std::size_t test_per_class = 1;
  double separation = 2.0;

  void validate() const;
};

FewShotLogisticTask sample_fewshot_task(const FewShotConfig& config, RngStream& rng);

}  // namespace ufoblo
