// SPDX-License-Identifier: Apache-2.0
//
// Training mixtures: SNR-controlled mixing, a procedural toy corpus of
// harmonic "speech" and white/pink noise, and a folder-of-WAVs manifest.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lct/tensor.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace training {

struct Mixture {
  std::vector<Real> mixture;
  std::vector<Real> clean;
  std::vector<Real> noise;  // scaled noise actually added
};

/// Below this mean power a clean segment counts as silent.
inline constexpr double kSilencePower = 1e-8;

/// Scales `noise` (looped or cropped to the clean length) so that
/// 10 log10(P_clean / P_noise) == snr_db and adds it to `clean`.
/// Throws NumericError for a silent clean segment or an all-zero noise.
Mixture mix_at_snr(std::span<const Real> clean, std::span<const Real> noise, double snr_db);

/// 10 log10(P_a / P_b) over the whole signals.
double snr_db(std::span<const Real> signal, std::span<const Real> noise);

/// One clean and one noise recording to crop training segments from.
struct SourcePool {
  std::vector<std::vector<Real>> clean;
  std::vector<std::vector<Real>> noise;
};

/// Procedural desk-scale corpus: `speakers` harmonic voices and white + pink
/// noise, each `seconds_per_source` long.
SourcePool make_toy_pool(std::uint64_t seed, Index speakers = 2, double seconds_per_source = 12.0);

/// Synthetic voiced utterance: syllables of glided harmonic complexes with
/// formant-like envelopes, amplitude modulation and pauses.
std::vector<Real> synth_voice(std::uint64_t seed, double f0_low, double f0_high, Index samples,
                              int sample_rate = 16000);
std::vector<Real> white_noise(std::uint64_t seed, Index samples);
std::vector<Real> pink_noise(std::uint64_t seed, Index samples);

/// Reads "clean_path noise_path" lines (blank lines and '#' comments ignored);
/// relative paths resolve against the manifest's directory.
SourcePool load_manifest(const std::filesystem::path& manifest);

struct Batch {
  Tensor noisy;  // (B, N)
  Tensor clean;  // (B, N)
  std::vector<double> snr_db;
  std::uint64_t seed = 0;
};

struct SamplerConfig {
  Index batch = 8;
  Index segment = 32000;
  double snr_low = -5.0;
  double snr_high = 20.0;
};

/// Deterministic per-step batches: batch k depends only on (seed, k), so a
/// resumed run sees the same data as an uninterrupted one.
class MixtureSampler {
 public:
  MixtureSampler(SourcePool pool, const SamplerConfig& cfg, std::uint64_t seed);
  Batch batch(Index step) const;
  static std::uint64_t batch_seed(std::uint64_t seed, Index step);
  const SamplerConfig& config() const { return config_; }

 private:
  SourcePool pool_;
  SamplerConfig config_;
  std::uint64_t seed_;
};

/// Fixed evaluation mixtures built from sources disjoint from training.
struct HeldOutSet {
  std::vector<Mixture> items;
  std::vector<double> snr_db;
};

/// `count` mixtures of `segment` samples from a separately seeded toy pool at
/// SNRs cycling through `snrs`.
HeldOutSet make_toy_heldout(std::uint64_t seed, Index count, Index segment,
                            const std::vector<double>& snrs);

}  // namespace training
}  // namespace LCT_PRECISION_NS
}  // namespace lct
