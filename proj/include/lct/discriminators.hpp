// SPDX-License-Identifier: Apache-2.0
//
// Waveform discriminators for adversarial training: a multi-period bank
// (each period folds the signal into a (len/p, p) grid and runs 2-D convs
// with width-1 kernels) and a multi-scale bank (1-D conv stacks over the raw
// signal and its 2x, 4x average-pooled versions). All convs are weight
// normalised. Channel counts can be divided down for desk-scale runs.

#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "lct/losses.hpp"
#include "lct/nn/layers.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace disc {

struct ConvSpec {
  Index out_channels;
  Index kernel;
  Index stride;
  Index groups;
  Index padding;
};

struct DiscriminatorBankConfig {
  std::vector<Index> periods{2, 3, 5, 7, 11};
  Index scales = 3;
  /// Divides every hidden channel count (1 = published sizes).
  Index channel_divisor = 1;
  double leaky_slope = 0.1;

  void validate() const;
  /// Conv ladders before the single-channel output conv.
  std::vector<ConvSpec> period_stack() const;
  std::vector<ConvSpec> scale_stack() const;
  nlohmann::json to_json() const;
  static DiscriminatorBankConfig from_json(const nlohmann::json& j);
};

/// Weight-normalised conv over (B, C, H, W).
struct WnConv {
  Var direction, magnitude, bias;
  kernels::ConvGeometry geometry;

  WnConv() = default;
  WnConv(nn::ParamStore& store, const std::string& name, Index in_channels, Index out_channels,
         const kernels::ConvGeometry& g, std::mt19937_64& rng);
  Var operator()(const Var& x) const;
};

struct SubDiscriminator {
  std::vector<WnConv> layers;
  WnConv output;
  Index period = 0;  // 0 for scale discriminators
  Index pooling = 0;  // number of 2x poolings before the stack
};

class DiscriminatorBank {
 public:
  DiscriminatorBank(const DiscriminatorBankConfig& cfg, std::uint64_t seed);

  DiscriminatorBank(const DiscriminatorBank&) = delete;
  DiscriminatorBank& operator=(const DiscriminatorBank&) = delete;

  const DiscriminatorBankConfig& config() const { return config_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  std::size_t size() const { return subs_.size(); }

  /// Runs every sub-discriminator on (B, N) waveforms, periods first.
  std::vector<losses::DiscOutput> operator()(const Var& waves) const;

  /// Individual banks, for tests.
  losses::DiscOutput run_period(std::size_t index, const Var& waves) const;
  losses::DiscOutput run_scale(std::size_t index, const Var& waves) const;
  Index period_count() const { return static_cast<Index>(config_.periods.size()); }

 private:
  losses::DiscOutput run(const SubDiscriminator& sub, const Var& waves) const;

  DiscriminatorBankConfig config_;
  nn::ParamStore params_;
  std::vector<SubDiscriminator> subs_;
};

/// Folds (B, N) into (B, 1, ceil(N/p), p) after reflect padding on the right.
Var fold_period(const Var& waves, Index period);

}  // namespace disc
}  // namespace LCT_PRECISION_NS
}  // namespace lct
