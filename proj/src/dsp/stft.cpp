// SPDX-License-Identifier: Apache-2.0

#include "lct/dsp/stft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lct/dsp/fft.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace dsp {
namespace {

// Envelope values below this are treated as "not reconstructed" (kNone edges).
constexpr double kEnvelopeFloor = 1e-6;

std::vector<double> window_envelope(const StftConfig& cfg, const std::vector<Real>& window,
                                    Index frames) {
  const Index padded = (frames - 1) * cfg.hop + cfg.fft_size;
  std::vector<double> env(static_cast<std::size_t>(padded), 0.0);
  for (Index l = 0; l < frames; ++l)
    for (Index j = 0; j < cfg.fft_size; ++j) {
      const double w = window[static_cast<std::size_t>(j)];
      env[static_cast<std::size_t>(l * cfg.hop + j)] += w * w;
    }
  return env;
}

}  // namespace

void StftConfig::validate() const {
  check_config(fft_size >= 4 && fft_size % 2 == 0, "STFT size must be even and >= 4");
  check_config(hop >= 1 && fft_size % hop == 0, "STFT hop must divide the FFT size");
  check_config(2 * hop == fft_size, "only 50% overlap is supported (hop = fft_size / 2)");
  check_config(sample_rate > 0, "sample rate must be positive");
}

StftConfig StftConfig::with_size(Index fft_size, Padding padding) {
  StftConfig cfg;
  cfg.fft_size = fft_size;
  cfg.hop = fft_size / 2;
  cfg.padding = padding;
  return cfg;
}

std::vector<Real> make_window(const StftConfig& cfg) {
  std::vector<Real> w(static_cast<std::size_t>(cfg.fft_size));
  for (Index n = 0; n < cfg.fft_size; ++n) {
    const double hann =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                              static_cast<double>(cfg.fft_size)));
    w[static_cast<std::size_t>(n)] = static_cast<Real>(std::sqrt(hann));
  }
  return w;
}

double cola_deviation(const StftConfig& cfg) {
  const auto window = make_window(cfg);
  const Index overlap = cfg.fft_size / cfg.hop;
  std::vector<double> sums(static_cast<std::size_t>(cfg.hop), 0.0);
  for (Index n = 0; n < cfg.hop; ++n)
    for (Index r = 0; r < overlap; ++r) {
      const double w = window[static_cast<std::size_t>(n + r * cfg.hop)];
      sums[static_cast<std::size_t>(n)] += w * w;
    }
  double mean = 0;
  for (double s : sums) mean += s;
  mean /= static_cast<double>(sums.size());
  double worst = 0;
  for (double s : sums) worst = std::max(worst, std::abs(s - mean) / mean);
  return worst;
}

Index frame_count(Index signal_length, const StftConfig& cfg) {
  if (cfg.padding == Padding::kCausal) {
    if (signal_length < 1) return 0;
    return (signal_length - 1 + cfg.lead_padding()) / cfg.hop + 1;
  }
  if (signal_length < cfg.fft_size) return 0;
  return (signal_length - cfg.fft_size) / cfg.hop + 1;
}

std::complex<Real> Spectrogram::at(Index frame, Index bin) const {
  const Index i = (frame * bins() + bin) * 2;
  return {data[i], data[i + 1]};
}

Tensor stft_batch(const Tensor& waves, const StftConfig& cfg) {
  cfg.validate();
  check_shape(waves.rank() == 2, "stft expects (batch, samples)");
  const Index batch = waves.dim(0), length = waves.dim(1);
  const Index frames = frame_count(length, cfg);
  if (frames < 1)
    throw ShapeError("signal of " + std::to_string(length) +
                     " samples is shorter than one STFT frame of " +
                     std::to_string(cfg.fft_size));
  const Index bins = cfg.bins();
  const Index lead = cfg.lead_padding();
  const auto window = make_window(cfg);
  const RealFft fft(cfg.fft_size);

  Tensor out({batch, frames, bins, 2});
#pragma omp parallel
  {
    std::vector<Real> frame(static_cast<std::size_t>(cfg.fft_size));
#pragma omp for collapse(2) schedule(static)
    for (Index b = 0; b < batch; ++b)
      for (Index l = 0; l < frames; ++l) {
        const Real* x = waves.data() + b * length;
        for (Index j = 0; j < cfg.fft_size; ++j) {
          const Index i = l * cfg.hop - lead + j;
          frame[static_cast<std::size_t>(j)] =
              (i >= 0 && i < length) ? x[i] * window[static_cast<std::size_t>(j)] : Real{0};
        }
        fft.forward(frame.data(), out.data() + (b * frames + l) * bins * 2);
      }
  }
  return out;
}

Tensor stft_batch_adjoint(const Tensor& grad_spec, const StftConfig& cfg, Index signal_length) {
  const Index batch = grad_spec.dim(0), frames = grad_spec.dim(1), bins = grad_spec.dim(2);
  const Index lead = cfg.lead_padding();
  const auto window = make_window(cfg);
  const RealFft fft(cfg.fft_size);
  Tensor grad({batch, signal_length});
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < batch; ++b) {
    std::vector<Real> half(static_cast<std::size_t>(bins * 2));
    std::vector<Real> frame(static_cast<std::size_t>(cfg.fft_size));
    Real* g = grad.data() + b * signal_length;
    for (Index l = 0; l < frames; ++l) {
      const Real* src = grad_spec.data() + (b * frames + l) * bins * 2;
      for (Index k = 0; k < bins; ++k) {
        const Real scale = (k == 0 || k == bins - 1) ? Real{1} : Real{0.5};
        half[static_cast<std::size_t>(2 * k)] = src[2 * k] * scale;
        half[static_cast<std::size_t>(2 * k + 1)] = src[2 * k + 1] * scale;
      }
      fft.inverse(half.data(), frame.data());
      for (Index j = 0; j < cfg.fft_size; ++j) {
        const Index i = l * cfg.hop - lead + j;
        if (i >= 0 && i < signal_length)
          g[i] += frame[static_cast<std::size_t>(j)] * window[static_cast<std::size_t>(j)];
      }
    }
  }
  return grad;
}

Tensor istft_batch(const Tensor& spec, const StftConfig& cfg, Index signal_length) {
  cfg.validate();
  check_shape(spec.rank() == 4 && spec.dim(3) == 2, "istft expects (batch, frames, bins, 2)");
  check_shape(spec.dim(2) == cfg.bins(),
              "istft: spectrum has " + std::to_string(spec.dim(2)) + " bins, config expects " +
                  std::to_string(cfg.bins()));
  const Index batch = spec.dim(0), frames = spec.dim(1), bins = spec.dim(2);
  const Index lead = cfg.lead_padding();
  const auto window = make_window(cfg);
  const auto env = window_envelope(cfg, window, frames);
  const RealFft fft(cfg.fft_size);
  const Real norm = Real{1} / static_cast<Real>(cfg.fft_size);

  Tensor out({batch, signal_length});
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < batch; ++b) {
    std::vector<Real> frame(static_cast<std::size_t>(cfg.fft_size));
    Real* y = out.data() + b * signal_length;
    for (Index l = 0; l < frames; ++l) {
      fft.inverse(spec.data() + (b * frames + l) * bins * 2, frame.data());
      for (Index j = 0; j < cfg.fft_size; ++j) {
        const Index i = l * cfg.hop - lead + j;
        if (i >= 0 && i < signal_length)
          y[i] += frame[static_cast<std::size_t>(j)] * norm * window[static_cast<std::size_t>(j)];
      }
    }
    for (Index i = 0; i < signal_length; ++i) {
      const Index m = i + lead;
      const double e = m < static_cast<Index>(env.size()) ? env[static_cast<std::size_t>(m)] : 0.0;
      y[i] = e > kEnvelopeFloor ? static_cast<Real>(y[i] / e) : Real{0};
    }
  }
  return out;
}

Tensor istft_batch_adjoint(const Tensor& grad_wave, const StftConfig& cfg, Index frames) {
  const Index batch = grad_wave.dim(0), signal_length = grad_wave.dim(1);
  const Index bins = cfg.bins();
  const Index lead = cfg.lead_padding();
  const auto window = make_window(cfg);
  const auto env = window_envelope(cfg, window, frames);
  const RealFft fft(cfg.fft_size);
  const Real norm = Real{1} / static_cast<Real>(cfg.fft_size);

  Tensor grad({batch, frames, bins, 2});
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < batch; ++b) {
    std::vector<Real> scaled(static_cast<std::size_t>(signal_length));
    std::vector<Real> frame(static_cast<std::size_t>(cfg.fft_size));
    const Real* g = grad_wave.data() + b * signal_length;
    for (Index i = 0; i < signal_length; ++i) {
      const Index m = i + lead;
      const double e = m < static_cast<Index>(env.size()) ? env[static_cast<std::size_t>(m)] : 0.0;
      scaled[static_cast<std::size_t>(i)] = e > kEnvelopeFloor ? static_cast<Real>(g[i] / e) : Real{0};
    }
    for (Index l = 0; l < frames; ++l) {
      for (Index j = 0; j < cfg.fft_size; ++j) {
        const Index i = l * cfg.hop - lead + j;
        frame[static_cast<std::size_t>(j)] =
            (i >= 0 && i < signal_length)
                ? scaled[static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(j)] * norm
                : Real{0};
      }
      Real* dst = grad.data() + (b * frames + l) * bins * 2;
      fft.forward(frame.data(), dst);
      for (Index k = 0; k < bins; ++k) {
        const bool edge = (k == 0 || k == bins - 1);
        dst[2 * k] *= edge ? Real{1} : Real{2};
        dst[2 * k + 1] = edge ? Real{0} : dst[2 * k + 1] * Real{2};
      }
    }
  }
  return grad;
}

Spectrogram stft(std::span<const Real> signal, const StftConfig& cfg) {
  check_shape(!signal.empty(), "stft of an empty signal");
  const Index length = static_cast<Index>(signal.size());
  Tensor waves({1, length}, std::vector<Real>(signal.begin(), signal.end()));
  Tensor batch = stft_batch(waves, cfg);
  const Index frames = batch.dim(1);
  return {std::move(batch).reshape({frames, cfg.bins(), 2}), cfg, length};
}

std::vector<Real> istft(const Spectrogram& spec) {
  check_shape(spec.data.rank() == 3 && spec.data.dim(2) == 2,
              "istft expects a (frames, bins, 2) spectrogram");
  const Index frames = spec.frames();
  const Index length = spec.config.padding == Padding::kCausal
                           ? spec.signal_length
                           : (frames - 1) * spec.config.hop + spec.config.fft_size;
  Tensor batch = istft_batch(spec.data.reshape({1, frames, spec.bins(), 2}), spec.config, length);
  return std::move(batch.storage());
}

std::vector<Spectrogram> multi_res_spectra(std::span<const Real> signal,
                                           std::span<const Index> sizes, Padding padding) {
  std::vector<Spectrogram> out;
  out.reserve(sizes.size());
  for (Index size : sizes) out.push_back(stft(signal, StftConfig::with_size(size, padding)));
  return out;
}

}  // namespace dsp
}  // namespace LCT_PRECISION_NS
}  // namespace lct
