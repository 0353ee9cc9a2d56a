#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gatr/autodiff/tape.hpp"

namespace gatr::ad {

struct AdamConfig {
  double lr_start = 3e-4;
  double lr_end = 3e-6;
  std::int64_t total_steps = 3000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global-norm clip threshold; <= 0 disables clipping.
  double clip_norm = 0.0;
};

/// lr_start * (lr_end / lr_start)^(step / total_steps).
double lr_at(const AdamConfig& cfg, std::int64_t step);

class Adam {
 public:
  explicit Adam(AdamConfig cfg);

  /// One bias-corrected update. Throws NumericError naming the first parameter
  /// array with a non-finite gradient. Returns the learning rate used.
  double step(std::span<Tensor> params, std::span<const Tensor> grads);

  std::int64_t steps_taken() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// sqrt of the sum of squares over all arrays.
double global_norm(std::span<const Tensor> grads);

}  // namespace gatr::ad
