#pragma once

#include <span>
#include <vector>

#include "mmrec/nn/layers.hpp"

namespace mmrec::nn {

/// Defaults follow the common framework settings.
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

/// Adam with bias correction folded into the step size:
/// w -= lr * sqrt(1 - b2^t) / (1 - b1^t) * m / (sqrt(v) + eps).
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<Parameter<T>* const> params);
  long step_count() const noexcept { return steps_; }

 private:
  AdamConfig config_;
  std::vector<Matrix<T>> m_, v_;
  long steps_ = 0;
};

}  // namespace mmrec::nn
