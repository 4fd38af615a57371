// SPDX-License-Identifier: Apache-2.0

#include "lct/model/generator.hpp"

#include <random>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {

Var TransformerBlock::on_sequences(const Var& seq) const {
  Var h = norm1(ops::add(gru(seq), seq));
  return norm2(ops::add(attention(h, mask), h));
}

Var TransformerBlock::operator()(const Var& x) const {
  const Index batch = x.dim(0), channels = x.dim(1), frames = x.dim(2), bins = x.dim(3);
  if (axis == 'T') {
    // (B, C, T, F) -> (B, F, T, C) -> (B*F, T, C)
    Var seq = ops::reshape(ops::permute(x, {0, 3, 2, 1}), {batch * bins, frames, channels});
    Var y = ops::reshape(on_sequences(seq), {batch, bins, frames, channels});
    return ops::permute(y, {0, 3, 2, 1});
  }
  // (B, C, T, F) -> (B, T, F, C) -> (B*T, F, C)
  Var seq = ops::reshape(ops::permute(x, {0, 2, 3, 1}), {batch * frames, bins, channels});
  Var y = ops::reshape(on_sequences(seq), {batch, frames, bins, channels});
  return ops::permute(y, {0, 3, 1, 2});
}

Generator::Generator(const ModelConfig& cfg, std::uint64_t seed) : config_(cfg) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const Index layers = static_cast<Index>(config_.encoder_channels.size());

  Index in = 1;
  for (Index i = 0; i < layers; ++i) {
    const Index out = config_.encoder_channels[static_cast<std::size_t>(i)];
    encoder_.emplace_back(params_, "encoder." + std::to_string(i), in, out,
                          config_.encoder_geometry(), rng);
    in = out;
  }
  for (Index i = 0; i < layers; ++i) {
    const Index c = config_.encoder_channels[static_cast<std::size_t>(i)];
    skips_.emplace_back(params_, "skip." + std::to_string(i), c, c, config_.skip_geometry(), rng);
  }

  const Index width = config_.bottleneck_width();
  const nn::GroupedGruSpec gru_spec{width, width, config_.gru_groups};
  const Index first_t = config_.first_time_block();
  for (std::size_t b = 0; b < config_.bottleneck.size(); ++b) {
    const std::string name = "bottleneck." + std::to_string(b);
    TransformerBlock block;
    block.axis = config_.bottleneck[b];
    block.gru = nn::GroupedGru(params_, name + ".gru", gru_spec, rng);
    block.norm1 = nn::LayerNorm(params_, name + ".norm1", width);
    block.attention = nn::MultiHeadAttention(params_, name + ".attention", width, config_.heads, rng);
    block.norm2 = nn::LayerNorm(params_, name + ".norm2", width);
    block.mask = block.axis == 'T' ? config_.time_mask(static_cast<Index>(b) == first_t)
                                   : kernels::TrapezoidMask::unbounded();
    blocks_.push_back(std::move(block));
  }

  // Decoder layer i consumes [previous output, skip of the mirrored encoder layer].
  Index prev = width;
  for (Index i = 0; i < layers; ++i) {
    const Index mirrored = config_.encoder_channels[static_cast<std::size_t>(layers - 1 - i)];
    const Index out = config_.decoder_channels[static_cast<std::size_t>(i)];
    decoder_.emplace_back(params_, "decoder." + std::to_string(i), prev + mirrored, out,
                          config_.decoder_geometry(), rng);
    prev = out;
  }
}

Var Generator::forward(const Var& features) const {
  check_shape(features.value().rank() == 4 && features.dim(1) == 1 &&
                  features.dim(3) == config_.bins(),
              "generator expects (batch, 1, frames, " + std::to_string(config_.bins()) +
                  ") features, got " + shape_str(features.shape()));
  const Real slope = static_cast<Real>(config_.leaky_slope);
  std::vector<Var> skip_out;
  Var x = features;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    x = ops::leaky_relu(encoder_[i](x), slope);
    skip_out.push_back(skips_[i](x));
  }
  for (const auto& block : blocks_) x = block(x);
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    x = decoder_[i](ops::concat_channels(x, skip_out[skip_out.size() - 1 - i]));
    x = i + 1 < decoder_.size() ? ops::leaky_relu(x, slope) : ops::sigmoid(x);
  }
  return x;
}

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
