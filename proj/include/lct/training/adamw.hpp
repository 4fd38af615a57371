// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "lct/nn/layers.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace training {

struct AdamWConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 1e-2;

  void validate() const;
};

/// Decoupled weight decay Adam with bias-corrected moments:
///   theta *= 1 - lr * wd
///   m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
///   theta -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
class AdamW {
 public:
  AdamW(const nn::ParamStore& params, const AdamWConfig& cfg);

  /// Applies one update using the gradients currently held by the params.
  /// Parameters without a gradient buffer are treated as having zero gradient.
  void step(nn::ParamStore& params);

  const AdamWConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  Index steps() const { return t_; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void set_steps(Index t) { t_ = t; }

 private:
  AdamWConfig config_;
  std::vector<Tensor> m_, v_;
  Index t_ = 0;
};

/// L2 norm over every gradient buffer of the store.
double grad_norm(const nn::ParamStore& params);

}  // namespace training
}  // namespace LCT_PRECISION_NS
}  // namespace lct
