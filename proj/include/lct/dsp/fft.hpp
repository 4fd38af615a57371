// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lct/common.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace dsp {

/// Real-input FFT of a fixed size backed by FFTW. Complex values are stored
/// interleaved (re, im) for bins 0..size/2. Execution is thread-safe.
class RealFft {
 public:
  explicit RealFft(Index size);

  Index size() const noexcept { return size_; }
  Index bins() const noexcept { return size_ / 2 + 1; }

  /// out[2k], out[2k+1] = sum_n in[n] e^{-2 pi i k n / size}.
  void forward(const Real* in, Real* out) const;

  /// Unnormalised Hermitian synthesis: out[n] = sum over the full symmetric
  /// spectrum. Imaginary parts of the DC and Nyquist bins are ignored.
  void inverse(const Real* in, Real* out) const;

 private:
  Index size_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace dsp
}  // namespace LCT_PRECISION_NS
}  // namespace lct
