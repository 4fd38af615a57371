// SPDX-License-Identifier: Apache-2.0
//
// Parameter container and the small layer wrappers the generator and the
// discriminators are assembled from.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lct/ops.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace nn {

/// Named, ordered set of trainable tensors.
class ParamStore {
 public:
  Var add(const std::string& name, Tensor value);
  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Var>>& entries() { return entries_; }
  const Var* find(const std::string& name) const;
  Index total_elements() const;
  /// Elements whose names start with `prefix`.
  Index elements_with_prefix(const std::string& prefix) const;
  void zero_grad();
  /// Order-sensitive hash of all parameter values.
  std::uint64_t checksum() const;

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

/// PyTorch-style default init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor uniform_init(Shape shape, Index fan_in, std::mt19937_64& rng);

struct Conv2d {
  Var weight, bias;
  kernels::ConvGeometry geometry;

  Conv2d() = default;
  Conv2d(ParamStore& store, const std::string& name, Index in_channels, Index out_channels,
         const kernels::ConvGeometry& g, std::mt19937_64& rng);
  Var operator()(const Var& x) const { return ops::conv2d(x, weight, bias, geometry); }
};

struct ConvTranspose2d {
  Var weight, bias;
  kernels::ConvGeometry geometry;

  ConvTranspose2d() = default;
  ConvTranspose2d(ParamStore& store, const std::string& name, Index in_channels,
                  Index out_channels, const kernels::ConvGeometry& g, std::mt19937_64& rng);
  Var operator()(const Var& x) const { return ops::conv_transpose2d(x, weight, bias, geometry); }
};

struct Linear {
  Var weight, bias;

  Linear() = default;
  Linear(ParamStore& store, const std::string& name, Index in_features, Index out_features,
         std::mt19937_64& rng);
  Var operator()(const Var& x) const { return ops::linear(x, weight, bias); }
};

struct LayerNorm {
  Var gain, bias;

  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, Index width);
  Var operator()(const Var& x) const { return ops::layer_norm(x, gain, bias); }
};

struct GroupedGruSpec {
  Index feature_size = 64;
  Index hidden_size = 64;
  Index groups = 4;

  void validate() const;
  /// groups * 3 * ((f/g)(h/g) + (h/g)^2 + h/g)
  Index param_count() const;
};

struct GroupedGru {
  Var w_ih, w_hh, bias;
  GroupedGruSpec spec;

  GroupedGru() = default;
  GroupedGru(ParamStore& store, const std::string& name, const GroupedGruSpec& spec,
             std::mt19937_64& rng);
  /// (N, S, F) -> (N, S, H) from a zero state.
  Var operator()(const Var& x) const { return ops::gru(x, w_ih, w_hh, bias); }
};

struct MultiHeadAttention {
  Linear query, key, value, output;
  Index heads = 4;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& store, const std::string& name, Index width, Index heads,
                     std::mt19937_64& rng);
  /// Self-attention over (N, S, D).
  Var operator()(const Var& x, const kernels::TrapezoidMask& mask) const;
};

}  // namespace nn
}  // namespace LCT_PRECISION_NS
}  // namespace lct
