#pragma once

#include <cstdint>
#include <vector>

#include "gridshed/matrix.hpp"

namespace gridshed {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment state per parameter tensor, with bias correction.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // params and grads are parallel lists; shapes are locked in on first call.
  void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);

  std::int64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace gridshed
