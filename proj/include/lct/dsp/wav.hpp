// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "lct/common.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace dsp {

inline constexpr int kSampleRate = 16000;

enum class WavFormat { kPcm16, kFloat32 };

struct Wave {
  std::vector<Real> samples;
  int sample_rate = kSampleRate;
  WavFormat format = WavFormat::kPcm16;
};

/// Reads a mono 16 kHz file in 16-bit PCM or 32-bit float. Anything else
/// (other rates, channel counts, encodings) throws IoError.
Wave read_wav(const std::filesystem::path& path);

/// Writes mono audio; 16-bit output is clipped to [-1, 1).
void write_wav(const std::filesystem::path& path, const std::vector<Real>& samples,
               WavFormat format = WavFormat::kPcm16, int sample_rate = kSampleRate);

}  // namespace dsp
}  // namespace LCT_PRECISION_NS
}  // namespace lct
