// SPDX-License-Identifier: Apache-2.0
//
// Mask-estimating U-Net: causal conv encoder, a stack of time/frequency
// transformers at the bottleneck, transposed-conv decoder with point-wise
// skip paths concatenated onto the decoder input, sigmoid mask head.

#pragma once

#include <cstdint>
#include <vector>

#include "lct/model/config.hpp"
#include "lct/nn/layers.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

/// GRU -> residual -> LayerNorm -> MHA -> residual -> LayerNorm along one axis.
struct TransformerBlock {
  char axis = 'T';
  nn::GroupedGru gru;
  nn::LayerNorm norm1;
  nn::MultiHeadAttention attention;
  nn::LayerNorm norm2;
  kernels::TrapezoidMask mask;

  /// (B, C, T, F) -> (B, C, T, F)
  Var operator()(const Var& x) const;
  /// Same computation on sequences already folded to (N, S, C).
  Var on_sequences(const Var& seq) const;
};

class Generator {
 public:
  explicit Generator(const ModelConfig& cfg, std::uint64_t seed = kDefaultSeed);

  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;
  Generator(Generator&&) = default;
  Generator& operator=(Generator&&) = default;

  const ModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  /// Compressed magnitudes (B, 1, T, bins) -> mask in (0, 1), same shape.
  Var forward(const Var& features) const;

  const std::vector<nn::Conv2d>& encoder() const { return encoder_; }
  const std::vector<nn::Conv2d>& skips() const { return skips_; }
  const std::vector<nn::ConvTranspose2d>& decoder() const { return decoder_; }
  const std::vector<TransformerBlock>& blocks() const { return blocks_; }

 private:
  ModelConfig config_;
  nn::ParamStore params_;
  std::vector<nn::Conv2d> encoder_;
  std::vector<nn::Conv2d> skips_;
  std::vector<nn::ConvTranspose2d> decoder_;
  std::vector<TransformerBlock> blocks_;
};

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
