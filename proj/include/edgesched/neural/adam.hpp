#pragma once

#include <cmath>

#include "edgesched/neural/params.hpp"

namespace edgesched::neural {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer with bias-corrected first and second moments.
class Adam {
 public:
  Adam(const ModelShape& shape, AdamConfig cfg)
      : cfg_(cfg), m_(ModelParams::zeros(shape)), v_(ModelParams::zeros(shape)) {}

  void step(ModelParams& params, const ModelParams& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = m_.tensors();
    auto v = v_.tensors();
    for (std::size_t k = 0; k < ModelParams::kTensorCount; ++k) {
      m[k]->array() = cfg_.beta1 * m[k]->array() + (1.0 - cfg_.beta1) * g[k]->array();
      v[k]->array() = cfg_.beta2 * v[k]->array() + (1.0 - cfg_.beta2) * g[k]->array().square();
      p[k]->array() -= cfg_.learning_rate * (m[k]->array() / c1) / ((v[k]->array() / c2).sqrt() + cfg_.epsilon);
    }
  }

  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  ModelParams m_;
  ModelParams v_;
  long t_ = 0;
};

}  // namespace edgesched::neural
