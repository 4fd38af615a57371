// SPDX-License-Identifier: Apache-2.0
//
// Offline enhancement: STFT, compressed-magnitude features, mask estimation,
// mask linearisation m^(1/c), noisy-phase resynthesis.
//
// With lookahead > 0 the signal is extended by lookahead*hop zeros before
// analysis and the result is trimmed back, so the last frames see the same
// (silent) future a flushed stream sees.

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "lct/dsp/stft.hpp"
#include "lct/model/generator.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {

inline Real compressed_magnitude(Real re, Real im, Real c) {
  return std::pow(std::sqrt(re * re + im * im), c);
}

dsp::StftConfig analysis_config(const ModelConfig& cfg);

/// (B, T, bins, 2) spectrum -> (B, 1, T, bins) compressed magnitudes.
Tensor input_features(const Tensor& spectrum, Real compression);

/// Differentiable batch path used in training: (B, N) noisy -> (B, N) estimate.
Var enhance_batch(const Generator& gen, const Tensor& noisy);

/// Offline enhancement of one 16 kHz utterance.
std::vector<Real> enhance_offline(const Generator& gen, std::span<const Real> noisy,
                                  int sample_rate = 16000);

/// Mask-domain variant for tests: returns the linear mask (T, bins) applied to the input.
Tensor linear_mask(const Generator& gen, std::span<const Real> noisy);

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
