// SPDX-License-Identifier: Apache-2.0
//
// STFT analysis/synthesis with a square-root periodic Hann window on both
// sides. At 50% overlap the squared window sums to one, so overlap-add needs
// no extra gain and reconstruction is exact up to rounding.
//
// Framing policies:
//   kNone    frame l covers [l*hop, l*hop + fft); floor((N - fft)/hop) + 1
//            frames. The first and last hop are only partially covered by the
//            window envelope and are not reconstructed.
//   kCausal  (fft - hop) zeros are prepended and enough zeros appended to
//            cover every input sample twice; ceil(N/hop) + 1 frames at 50%
//            overlap. Frame l covers input samples [l*hop - (fft - hop),
//            l*hop + hop). istft returns exactly N samples. A single sample
//            produces two frames and round-trips to one sample.

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "lct/tensor.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace dsp {

enum class Padding { kNone, kCausal };
enum class WindowKind { kSqrtHann };

struct StftConfig {
  Index fft_size = 512;
  Index hop = 256;
  WindowKind window = WindowKind::kSqrtHann;
  int sample_rate = 16000;
  Padding padding = Padding::kCausal;

  Index bins() const { return fft_size / 2 + 1; }
  Index lead_padding() const { return padding == Padding::kCausal ? fft_size - hop : 0; }
  void validate() const;

  static StftConfig with_size(Index fft_size, Padding padding = Padding::kCausal);
};

/// Resolutions of the multi-resolution spectral loss.
inline constexpr Index kLossResolutions[] = {320, 512, 768};

std::vector<Real> make_window(const StftConfig& cfg);

/// Largest relative deviation of the squared-window overlap-add envelope from
/// its mean over one hop. Zero for an exact COLA pair.
double cola_deviation(const StftConfig& cfg);

Index frame_count(Index signal_length, const StftConfig& cfg);

struct Spectrogram {
  Tensor data;  // (frames, bins, 2) interleaved re/im
  StftConfig config;
  Index signal_length = 0;

  Index frames() const { return data.dim(0); }
  Index bins() const { return data.dim(1); }
  std::complex<Real> at(Index frame, Index bin) const;
  Real magnitude(Index frame, Index bin) const { return std::abs(at(frame, bin)); }
};

Spectrogram stft(std::span<const Real> signal, const StftConfig& cfg);
std::vector<Real> istft(const Spectrogram& spec);

std::vector<Spectrogram> multi_res_spectra(std::span<const Real> signal,
                                           std::span<const Index> sizes = kLossResolutions,
                                           Padding padding = Padding::kCausal);

// Batched forms over (B, N) waveforms and (B, frames, bins, 2) spectra, with
// their adjoints for backpropagation.
Tensor stft_batch(const Tensor& waves, const StftConfig& cfg);
Tensor stft_batch_adjoint(const Tensor& grad_spec, const StftConfig& cfg, Index signal_length);
Tensor istft_batch(const Tensor& spec, const StftConfig& cfg, Index signal_length);
Tensor istft_batch_adjoint(const Tensor& grad_wave, const StftConfig& cfg, Index frames);

}  // namespace dsp
}  // namespace LCT_PRECISION_NS
}  // namespace lct
