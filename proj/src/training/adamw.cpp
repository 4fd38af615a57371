// SPDX-License-Identifier: Apache-2.0

#include "lct/training/adamw.hpp"

#include <cmath>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace training {

void AdamWConfig::validate() const {
  check_config(lr >= 0, "learning rate must be non-negative");
  check_config(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "Adam betas must lie in [0, 1)");
  check_config(eps > 0, "Adam epsilon must be positive");
  check_config(weight_decay >= 0, "weight decay must be non-negative");
}

AdamW::AdamW(const nn::ParamStore& params, const AdamWConfig& cfg) : config_(cfg) {
  config_.validate();
  for (const auto& entry : params.entries()) {
    m_.emplace_back(entry.second.shape());
    v_.emplace_back(entry.second.shape());
  }
}

void AdamW::step(nn::ParamStore& params) {
  auto& entries = params.entries();
  check_shape(entries.size() == m_.size(), "optimizer was built for a different parameter set");
  ++t_;
  const double lr = config_.lr, b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double decay = 1.0 - lr * config_.weight_decay;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Var& p = entries[i].second;
    Tensor& theta = p.mutable_value();
    const bool has = p.has_grad();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (Index j = 0; j < theta.numel(); ++j) {
      const double g = has ? static_cast<double>(p.grad()[j]) : 0.0;
      const double mj = b1 * m[j] + (1.0 - b1) * g;
      const double vj = b2 * v[j] + (1.0 - b2) * g * g;
      m[j] = static_cast<Real>(mj);
      v[j] = static_cast<Real>(vj);
      const double update = (mj / c1) / (std::sqrt(vj / c2) + config_.eps);
      theta[j] = static_cast<Real>(static_cast<double>(theta[j]) * decay - lr * update);
    }
  }
}

double grad_norm(const nn::ParamStore& params) {
  double ss = 0;
  for (const auto& entry : params.entries()) {
    if (!entry.second.has_grad()) continue;
    for (Real g : entry.second.grad().values()) ss += static_cast<double>(g) * g;
  }
  return std::sqrt(ss);
}

}  // namespace training
}  // namespace LCT_PRECISION_NS
}  // namespace lct
