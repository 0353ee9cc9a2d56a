#include "gatr/autodiff/adam.hpp"

#include <cmath>
#include <string>

namespace gatr::ad {

double lr_at(const AdamConfig& cfg, std::int64_t step) {
  if (cfg.total_steps <= 0) return cfg.lr_start;
  const double t = static_cast<double>(step) / static_cast<double>(cfg.total_steps);
  return cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, t);
}

double global_norm(std::span<const Tensor> grads) {
  double acc = 0.0;
  for (const Tensor& g : grads) {
    for (double v : g.values()) acc += v * v;
  }
  return std::sqrt(acc);
}

Adam::Adam(AdamConfig cfg) : cfg_(cfg) {
  if (!(cfg_.lr_start > 0.0) || !(cfg_.lr_end > 0.0)) {
    throw InvalidArgument("Adam: learning rates must be positive");
  }
  if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0) || !(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0)) {
    throw InvalidArgument("Adam: betas must be in [0, 1)");
  }
}

double Adam::step(std::span<Tensor> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("Adam::step: parameter/gradient count mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    params[i].require_same_shape(grads[i], "Adam::step");
    if (!nn::all_finite(grads[i])) {
      throw NumericError("Adam::step: non-finite gradient in parameter array " + std::to_string(i) + " at step " +
                         std::to_string(step_));
    }
  }
  if (m_.empty()) {
    for (const Tensor& p : params) {
      m_.emplace_back(p.shape());
      v_.emplace_back(p.shape());
    }
  } else if (m_.size() != params.size()) {
    throw ShapeError("Adam::step: parameter set changed between steps");
  }

  double clip = 1.0;
  if (cfg_.clip_norm > 0.0) {
    const double n = global_norm(grads);
    if (n > cfg_.clip_norm) clip = cfg_.clip_norm / n;
  }

  const double lr = lr_at(cfg_, step_);
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data();
    const double* g = grads[i].data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      const double gj = clip * g[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps);
    }
  }
  return lr;
}

}  // namespace gatr::ad
