// SPDX-License-Identifier: Apache-2.0

#include "lct/discriminators.hpp"

#include <cmath>
#include <numeric>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace disc {
namespace {

Index divided(Index channels, Index divisor) { return std::max<Index>(1, channels / divisor); }

std::vector<ConvSpec> divide_stack(std::vector<ConvSpec> stack, Index divisor) {
  for (auto& s : stack) {
    s.out_channels = divided(s.out_channels, divisor);
    s.groups = std::max<Index>(1, s.groups / divisor);
  }
  return stack;
}

}  // namespace

void DiscriminatorBankConfig::validate() const {
  check_config(!periods.empty() || scales >= 1, "the discriminator bank is empty");
  for (std::size_t i = 0; i < periods.size(); ++i) {
    check_config(periods[i] >= 2, "periods must be at least 2");
    for (std::size_t j = 0; j < i; ++j)
      check_config(std::gcd(periods[i], periods[j]) == 1,
                   "periods " + std::to_string(periods[j]) + " and " + std::to_string(periods[i]) +
                       " are not coprime");
  }
  check_config(scales >= 0, "scale count must be non-negative");
  check_config(channel_divisor >= 1, "channel divisor must be positive");
  check_config(leaky_slope >= 0, "leaky slope must be non-negative");
  Index in = 1;
  for (const auto& s : scale_stack()) {
    check_config(in % s.groups == 0 && s.out_channels % s.groups == 0,
                 "channel divisor " + std::to_string(channel_divisor) +
                     " leaves a grouped scale conv with indivisible channels");
    in = s.out_channels;
  }
}

std::vector<ConvSpec> DiscriminatorBankConfig::period_stack() const {
  return divide_stack({{32, 5, 3, 1, 2},
                       {128, 5, 3, 1, 2},
                       {512, 5, 3, 1, 2},
                       {1024, 5, 3, 1, 2},
                       {1024, 5, 1, 1, 2}},
                      channel_divisor);
}

std::vector<ConvSpec> DiscriminatorBankConfig::scale_stack() const {
  return divide_stack({{128, 15, 1, 1, 7},
                       {128, 41, 2, 4, 20},
                       {256, 41, 2, 16, 20},
                       {512, 41, 4, 16, 20},
                       {1024, 41, 4, 16, 20},
                       {1024, 41, 1, 16, 20},
                       {1024, 5, 1, 1, 2}},
                      channel_divisor);
}

nlohmann::json DiscriminatorBankConfig::to_json() const {
  return {{"periods", periods},
          {"scales", scales},
          {"channel_divisor", channel_divisor},
          {"leaky_slope", leaky_slope}};
}

DiscriminatorBankConfig DiscriminatorBankConfig::from_json(const nlohmann::json& j) {
  DiscriminatorBankConfig c;
  try {
    c.periods = j.value("periods", c.periods);
    c.scales = j.value("scales", c.scales);
    c.channel_divisor = j.value("channel_divisor", c.channel_divisor);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed discriminator config: ") + e.what());
  }
  c.validate();
  return c;
}

WnConv::WnConv(nn::ParamStore& store, const std::string& name, Index in_channels,
               Index out_channels, const kernels::ConvGeometry& g, std::mt19937_64& rng)
    : geometry(g) {
  const Index fan_in = in_channels / g.groups * g.kernel_h * g.kernel_w;
  Tensor v = nn::uniform_init({out_channels, in_channels / g.groups, g.kernel_h, g.kernel_w},
                              fan_in, rng);
  // Start from w == v: magnitude is the per-output-channel norm.
  Tensor mag({out_channels});
  const Index width = v.numel() / out_channels;
  for (Index o = 0; o < out_channels; ++o) {
    double ss = 0;
    for (Index j = 0; j < width; ++j) ss += static_cast<double>(v[o * width + j]) * v[o * width + j];
    mag[o] = static_cast<Real>(std::sqrt(ss));
  }
  direction = store.add(name + ".direction", std::move(v));
  magnitude = store.add(name + ".magnitude", std::move(mag));
  bias = store.add(name + ".bias", nn::uniform_init({out_channels}, fan_in, rng));
}

Var WnConv::operator()(const Var& x) const {
  return ops::conv2d(x, ops::weight_norm(direction, magnitude), bias, geometry);
}

Var fold_period(const Var& waves, Index period) {
  check_shape(waves.value().rank() == 2, "fold_period expects (batch, samples)");
  const Index batch = waves.dim(0), length = waves.dim(1);
  const Index pad = (period - length % period) % period;
  Var padded = pad > 0 ? ops::reflect_pad_right(waves, pad) : waves;
  return ops::reshape(padded, {batch, 1, (length + pad) / period, period});
}

DiscriminatorBank::DiscriminatorBank(const DiscriminatorBankConfig& cfg, std::uint64_t seed)
    : config_(cfg) {
  config_.validate();
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < config_.periods.size(); ++i) {
    const std::string name = "mpd." + std::to_string(config_.periods[i]);
    SubDiscriminator sub;
    sub.period = config_.periods[i];
    Index in = 1, l = 0;
    for (const auto& s : config_.period_stack()) {
      kernels::ConvGeometry g;
      g.kernel_h = s.kernel;
      g.stride_h = s.stride;
      g.pad_top = g.pad_bottom = s.padding;
      sub.layers.emplace_back(params_, name + ".conv" + std::to_string(l++), in, s.out_channels, g, rng);
      in = s.out_channels;
    }
    kernels::ConvGeometry g;
    g.kernel_h = 3;
    g.pad_top = g.pad_bottom = 1;
    sub.output = WnConv(params_, name + ".output", in, 1, g, rng);
    subs_.push_back(std::move(sub));
  }
  for (Index scale = 0; scale < config_.scales; ++scale) {
    const std::string name = "msd." + std::to_string(scale);
    SubDiscriminator sub;
    sub.pooling = scale;
    Index in = 1, l = 0;
    for (const auto& s : config_.scale_stack()) {
      kernels::ConvGeometry g;
      g.kernel_w = s.kernel;
      g.stride_w = s.stride;
      g.pad_left = g.pad_right = s.padding;
      g.groups = s.groups;
      sub.layers.emplace_back(params_, name + ".conv" + std::to_string(l++), in, s.out_channels, g, rng);
      in = s.out_channels;
    }
    kernels::ConvGeometry g;
    g.kernel_w = 3;
    g.pad_left = g.pad_right = 1;
    sub.output = WnConv(params_, name + ".output", in, 1, g, rng);
    subs_.push_back(std::move(sub));
  }
}

losses::DiscOutput DiscriminatorBank::run(const SubDiscriminator& sub, const Var& waves) const {
  Var x;
  if (sub.period > 0) {
    x = fold_period(waves, sub.period);
  } else {
    Var pooled = waves;
    for (Index i = 0; i < sub.pooling; ++i) pooled = ops::avg_pool2_last(pooled);
    x = ops::reshape(pooled, {pooled.dim(0), 1, 1, pooled.dim(1)});
  }
  losses::DiscOutput out;
  const Real slope = static_cast<Real>(config_.leaky_slope);
  for (const auto& layer : sub.layers) {
    x = ops::leaky_relu(layer(x), slope);
    out.features.push_back(x);
  }
  out.score = sub.output(x);
  out.features.push_back(out.score);
  return out;
}

losses::DiscOutput DiscriminatorBank::run_period(std::size_t index, const Var& waves) const {
  check_config(index < config_.periods.size(), "period discriminator index out of range");
  return run(subs_[index], waves);
}

losses::DiscOutput DiscriminatorBank::run_scale(std::size_t index, const Var& waves) const {
  check_config(static_cast<Index>(index) < config_.scales, "scale discriminator index out of range");
  return run(subs_[config_.periods.size() + index], waves);
}

std::vector<losses::DiscOutput> DiscriminatorBank::operator()(const Var& waves) const {
  check_shape(waves.value().rank() == 2 && waves.dim(1) >= 1,
              "discriminators expect non-empty (batch, samples) waveforms");
  std::vector<losses::DiscOutput> out;
  out.reserve(subs_.size());
  for (const auto& sub : subs_) out.push_back(run(sub, waves));
  return out;
}

}  // namespace disc
}  // namespace LCT_PRECISION_NS
}  // namespace lct
