// SPDX-License-Identifier: Apache-2.0

#include "lct/model/config.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {

std::string to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::kRealMagnitude: return "real-magnitude";
    case MaskKind::kComplexRatio: return "complex-ratio";
    case MaskKind::kComplexMapping: return "complex-mapping";
  }
  return "unknown";
}

MaskKind mask_kind_from_string(const std::string& name) {
  for (MaskKind k : {MaskKind::kRealMagnitude, MaskKind::kComplexRatio, MaskKind::kComplexMapping})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown mask kind '" + name + "'");
}

void ModelConfig::validate() const {
  check_config(!bottleneck.empty(), "bottleneck string must not be empty");
  for (std::size_t i = 0; i < bottleneck.size(); ++i) {
    const char c = bottleneck[i];
    if (c != 'T' && c != 'F')
      throw ConfigError("invalid bottleneck character '" + std::string(1, c) + "' at position " +
                        std::to_string(i) + " in \"" + bottleneck + "\" (allowed: T, F)");
  }
  check_config(lookahead == 0 || lookahead == 1,
               "lookahead must be 0 or 1, got " + std::to_string(lookahead));
  check_config(!encoder_channels.empty() && encoder_channels.size() == decoder_channels.size(),
               "encoder and decoder need the same, non-zero number of layers");
  check_config(decoder_channels.back() == 1, "the last decoder layer must have one channel");
  for (Index c : encoder_channels) check_config(c >= 1, "channel counts must be positive");
  for (Index c : decoder_channels) check_config(c >= 1, "channel counts must be positive");
  check_config(kernel_time >= 1, "time kernel must be at least 1");
  check_config(kernel_freq >= 1 && kernel_freq % 2 == 1, "frequency kernel must be odd");
  check_config(stride_freq >= 1, "frequency stride must be positive");
  check_config(fft_size >= 4 && hop * 2 == fft_size, "hop must be half the FFT size");
  check_config(heads >= 1 && bottleneck_width() % heads == 0,
               "heads (" + std::to_string(heads) + ") must divide the bottleneck width " +
                   std::to_string(bottleneck_width()));
  check_config(gru_groups >= 1 && bottleneck_width() % gru_groups == 0,
               "GRU groups (" + std::to_string(gru_groups) + ") must divide the bottleneck width " +
                   std::to_string(bottleneck_width()));
  check_config(context_frames >= 1, "context_frames must be positive");
  check_config(compression > 0 && compression <= 1, "compression must lie in (0, 1]");
  check_config(gamma >= 0, "gamma must be non-negative");
  check_config(mask == MaskKind::kRealMagnitude,
               "mask kind '" + to_string(mask) + "' is reserved but not implemented");

  // The decoder must restore every encoder size exactly.
  const auto ladder = freq_ladder();
  for (std::size_t i = ladder.size() - 1; i > 0; --i) {
    const Index up = kernels::conv_transpose_out_size(ladder[i], kernel_freq, stride_freq,
                                                      kernel_freq / 2, kernel_freq / 2);
    check_config(up == ladder[i - 1], "decoder layer would produce " + std::to_string(up) +
                                          " bins where the encoder had " +
                                          std::to_string(ladder[i - 1]));
  }
}

std::vector<Index> ModelConfig::freq_ladder() const {
  std::vector<Index> sizes{bins()};
  for (std::size_t i = 0; i < encoder_channels.size(); ++i)
    sizes.push_back(kernels::conv_out_size(sizes.back(), kernel_freq, stride_freq,
                                           kernel_freq / 2, kernel_freq / 2));
  return sizes;
}

kernels::ConvGeometry ModelConfig::encoder_geometry() const {
  kernels::ConvGeometry g;
  g.kernel_h = kernel_time;
  g.kernel_w = kernel_freq;
  g.stride_w = stride_freq;
  g.pad_top = kernel_time - 1;
  g.pad_left = g.pad_right = kernel_freq / 2;
  return g;
}

kernels::ConvGeometry ModelConfig::decoder_geometry() const {
  kernels::ConvGeometry g;
  g.kernel_h = kernel_time;
  g.kernel_w = kernel_freq;
  g.stride_w = stride_freq;
  g.pad_bottom = kernel_time - 1;
  g.pad_left = g.pad_right = kernel_freq / 2;
  return g;
}

kernels::ConvGeometry ModelConfig::skip_geometry() const { return {}; }

kernels::TrapezoidMask ModelConfig::time_mask(bool first_time_block) const {
  if (!time_mask_enabled) return kernels::TrapezoidMask::unbounded();
  return kernels::TrapezoidMask::causal(context_frames, first_time_block ? lookahead : 0);
}

Index ModelConfig::first_time_block() const {
  const auto pos = bottleneck.find('T');
  return pos == std::string::npos ? -1 : static_cast<Index>(pos);
}

double ModelConfig::latency_ms() const {
  return 1000.0 * static_cast<double>(fft_size + hop * lookahead) / sample_rate;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"encoder_channels", encoder_channels},
          {"decoder_channels", decoder_channels},
          {"kernel_time", kernel_time},
          {"kernel_freq", kernel_freq},
          {"stride_freq", stride_freq},
          {"bottleneck", bottleneck},
          {"heads", heads},
          {"gru_groups", gru_groups},
          {"context_frames", context_frames},
          {"lookahead", lookahead},
          {"compression", compression},
          {"gamma", gamma},
          {"leaky_slope", leaky_slope},
          {"fft_size", fft_size},
          {"hop", hop},
          {"sample_rate", sample_rate},
          {"mask", to_string(mask)}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.encoder_channels = j.value("encoder_channels", c.encoder_channels);
    c.decoder_channels = j.value("decoder_channels", c.decoder_channels);
    c.kernel_time = j.value("kernel_time", c.kernel_time);
    c.kernel_freq = j.value("kernel_freq", c.kernel_freq);
    c.stride_freq = j.value("stride_freq", c.stride_freq);
    c.bottleneck = j.value("bottleneck", c.bottleneck);
    c.heads = j.value("heads", c.heads);
    c.gru_groups = j.value("gru_groups", c.gru_groups);
    c.context_frames = j.value("context_frames", c.context_frames);
    c.lookahead = j.value("lookahead", c.lookahead);
    c.compression = j.value("compression", c.compression);
    c.gamma = j.value("gamma", c.gamma);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.fft_size = j.value("fft_size", c.fft_size);
    c.hop = j.value("hop", c.hop);
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.mask = mask_kind_from_string(j.value("mask", to_string(c.mask)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
