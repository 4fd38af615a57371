// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "lct/kernels/kernels.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {

/// Output head. Only the real magnitude mask is implemented; the complex
/// variants are reserved so configs and checkpoints can name them.
enum class MaskKind { kRealMagnitude, kComplexRatio, kComplexMapping };

std::string to_string(MaskKind kind);
MaskKind mask_kind_from_string(const std::string& name);

struct ModelConfig {
  std::vector<Index> encoder_channels{16, 32, 64};
  std::vector<Index> decoder_channels{32, 16, 1};
  Index kernel_time = 2;
  Index kernel_freq = 3;
  Index stride_freq = 2;
  /// Transformer stack, one character per block: 'T' time axis, 'F' frequency axis.
  std::string bottleneck = "FTF";
  Index heads = 4;
  Index gru_groups = 4;
  Index context_frames = 62;
  Index lookahead = 0;
  double compression = 0.3;
  double gamma = 1e-8;
  double leaky_slope = 0.03;
  Index fft_size = 512;
  Index hop = 256;
  int sample_rate = 16000;
  MaskKind mask = MaskKind::kRealMagnitude;
  /// Diagnostic switch: false removes the banded mask from time attention,
  /// making the model non-causal. Only the causality probe's negative control
  /// uses it.
  bool time_mask_enabled = true;

  void validate() const;

  Index bins() const { return fft_size / 2 + 1; }
  /// Frequency sizes at the input and after each encoder layer.
  std::vector<Index> freq_ladder() const;
  Index bottleneck_bins() const { return freq_ladder().back(); }
  Index bottleneck_width() const { return encoder_channels.back(); }

  kernels::ConvGeometry encoder_geometry() const;
  kernels::ConvGeometry decoder_geometry() const;
  kernels::ConvGeometry skip_geometry() const;

  /// Attention window of a time block. Only the first time block sees the
  /// lookahead frame; later ones are strictly causal.
  kernels::TrapezoidMask time_mask(bool first_time_block) const;
  /// Index of the first 'T' in the bottleneck string, or -1.
  Index first_time_block() const;

  /// Frame length plus lookahead: 32 ms at lookahead 0, 48 ms at lookahead 1.
  double latency_ms() const;
  /// Delay between a streamed input sample and the matching output sample.
  Index stream_delay_samples() const { return (fft_size - hop) + hop * lookahead; }
  double frames_per_second() const { return static_cast<double>(sample_rate) / static_cast<double>(hop); }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// The eight stacking strings of the bottleneck ablation.
inline const std::vector<std::string> kAblationBottlenecks = {"TT",  "FF",  "TF",   "FT",
                                                              "TFT", "FTF", "TFTF", "FTFT"};

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
