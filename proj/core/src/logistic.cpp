// SPDX-License-Identifier: Apache-2.0
#include "ufoblo/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "ufoblo/errors.hpp"

namespace ufoblo {

namespace {

void validate_split(const LabelledSplit& split, std::size_t n, std::size_t m, const char* name) {
  if (split.inputs.empty() || split.inputs.size() % n != 0) {
    throw InvalidArgument(std::string("FewShotLogisticTask: bad ") + name + " input shape");
  }
  const std::size_t count = split.inputs.size() / n;
  if (split.labels.size() != count * m) {
    throw InvalidArgument(std::string("FewShotLogisticTask: ") + name + " labels do not match inputs");
  }
  for (double x : split.inputs) {
    if (!std::isfinite(x)) throw InvalidArgument("FewShotLogisticTask: non-finite input");
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t ones = 0;
    for (std::size_t c = 0; c < m; ++c) {
      const double y = split.labels[i * m + c];
      if (y == 1.0) {
        ++ones;
      } else if (y != 0.0) {
        throw InvalidArgument("FewShotLogisticTask: labels must be one-hot");
      }
    }
    if (ones != 1) throw InvalidArgument("FewShotLogisticTask: labels must be one-hot");
  }
}

const LabelledSplit& pick(const FewShotLogisticTask& task, Split split) {
  return split == Split::kTrain ? task.train : task.test;
}

void check_dim(const ParamVector& v, const FewShotLogisticTask& task, const char* what) {
  if (v.size() != task.dim()) {
    throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(task.dim()) +
                            " parameters, got " + std::to_string(v.size()));
  }
}

// logits[c] = sum_d W[c, d] * x[d]
void compute_logits(const ParamVector& phi, std::span<const double> x, std::size_t m,
                    std::size_t n, std::vector<double>& logits) {
  for (std::size_t c = 0; c < m; ++c) {
    double z = 0.0;
    for (std::size_t d = 0; d < n; ++d) z += phi[c * n + d] * x[d];
    logits[c] = z;
  }
}

void softmax(std::span<const double> logits, std::vector<double>& probs) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - zmax);
    total += probs[c];
  }
  for (double& p : probs) p /= total;
}

}  // namespace

void FewShotLogisticTask::validate() const {
  if (n == 0 || m == 0) throw InvalidArgument("FewShotLogisticTask: n and m must be >= 1");
  validate_split(train, n, m, "train");
  validate_split(test, n, m, "test");
}

double cce_loss(std::span<const double> logits, std::span<const double> label) {
  if (logits.size() != label.size() || logits.empty()) {
    throw DimensionMismatch("cce_loss: logits and label differ in length");
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - zmax);
  double dot = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) dot += (logits[c] - zmax) * label[c];
  // log-sum-exp and Z^T Y are both shifted by zmax; the shift cancels for one-hot Y.
  return std::log(total) - dot;
}

double logistic_loss(const ParamVector& phi, const FewShotLogisticTask& task, Split split) {
  check_dim(phi, task, "logistic_loss");
  const LabelledSplit& data = pick(task, split);
  const std::size_t count = data.inputs.size() / task.n;
  std::vector<double> logits(task.m);
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    std::span<const double> x(data.inputs.data() + i * task.n, task.n);
    std::span<const double> y(data.labels.data() + i * task.m, task.m);
    compute_logits(phi, x, task.m, task.n, logits);
    acc += cce_loss(logits, y);
  }
  return acc / static_cast<double>(count);
}

ParamVector logistic_grad(const ParamVector& phi, const FewShotLogisticTask& task, Split split) {
  check_dim(phi, task, "logistic_grad");
  const LabelledSplit& data = pick(task, split);
  const std::size_t count = data.inputs.size() / task.n;
  std::vector<double> logits(task.m);
  std::vector<double> probs(task.m);
  std::vector<double> grad(task.dim(), 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    std::span<const double> x(data.inputs.data() + i * task.n, task.n);
    std::span<const double> y(data.labels.data() + i * task.m, task.m);
    compute_logits(phi, x, task.m, task.n, logits);
    softmax(logits, probs);
    for (std::size_t c = 0; c < task.m; ++c) {
      const double residual = probs[c] - y[c];
      for (std::size_t d = 0; d < task.n; ++d) grad[c * task.n + d] += residual * x[d];
    }
  }
  const double inv = 1.0 / static_cast<double>(count);
  for (double& g : grad) g *= inv;
  return ParamVector(std::move(grad));
}

ParamVector logistic_hvp(const ParamVector& phi, const FewShotLogisticTask& task, Split split,
                         const ParamVector& dir) {
  check_dim(phi, task, "logistic_hvp");
  check_dim(dir, task, "logistic_hvp direction");
  const LabelledSplit& data = pick(task, split);
  const std::size_t count = data.inputs.size() / task.n;
  std::vector<double> logits(task.m);
  std::vector<double> probs(task.m);
  std::vector<double> dlogits(task.m);
  std::vector<double> out(task.dim(), 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    std::span<const double> x(data.inputs.data() + i * task.n, task.n);
    compute_logits(phi, x, task.m, task.n, logits);
    softmax(logits, probs);
    compute_logits(dir, x, task.m, task.n, dlogits);
    double s_dot = 0.0;
    for (std::size_t c = 0; c < task.m; ++c) s_dot += probs[c] * dlogits[c];
    for (std::size_t c = 0; c < task.m; ++c) {
      const double h = probs[c] * (dlogits[c] - s_dot);
      for (std::size_t d = 0; d < task.n; ++d) out[c * task.n + d] += h * x[d];
    }
  }
  const double inv = 1.0 / static_cast<double>(count);
  for (double& h : out) h *= inv;
  return ParamVector(std::move(out));
}

void FewShotConfig::validate() const {
  if (n == 0 || m < 2 || shots == 0 || test_per_class == 0) {
    throw InvalidArgument("FewShotConfig: need n >= 1, m >= 2, shots >= 1, test_per_class >= 1");
  }
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw InvalidArgument("FewShotConfig: separation must be finite and >= 0");
  }
}

FewShotLogisticTask sample_fewshot_task(const FewShotConfig& config, RngStream& rng) {
  config.validate();
  FewShotLogisticTask task;
  task.n = config.n;
  task.m = config.m;
  std::vector<double> means(config.m * config.n);
  for (double& mu : means) mu = config.separation * rng.normal();

  auto fill = [&](LabelledSplit& split, std::size_t per_class) {
    for (std::size_t k = 0; k < per_class; ++k) {
      for (std::size_t c = 0; c < config.m; ++c) {
        for (std::size_t d = 0; d < config.n; ++d) {
          split.inputs.push_back(means[c * config.n + d] + rng.normal());
        }
        for (std::size_t c2 = 0; c2 < config.m; ++c2) split.labels.push_back(c2 == c ? 1.0 : 0.0);
      }
    }
  };
  fill(task.train, config.shots);
  fill(task.test, config.test_per_class);
  task.validate();
  return task;
}

}  // namespace ufoblo
