// SPDX-License-Identifier: Apache-2.0

#include "lct/model/enhance.hpp"

#include <cmath>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {
namespace {

Tensor padded_batch(const Tensor& noisy, Index extra) {
  const Index batch = noisy.dim(0), length = noisy.dim(1);
  Tensor out({batch, length + extra});
  for (Index b = 0; b < batch; ++b)
    std::copy_n(noisy.data() + b * length, length, out.data() + b * (length + extra));
  return out;
}

Tensor as_batch(std::span<const Real> noisy) {
  check_shape(!noisy.empty(), "cannot enhance an empty signal");
  return Tensor({1, static_cast<Index>(noisy.size())}, std::vector<Real>(noisy.begin(), noisy.end()));
}

}  // namespace

dsp::StftConfig analysis_config(const ModelConfig& cfg) {
  dsp::StftConfig s;
  s.fft_size = cfg.fft_size;
  s.hop = cfg.hop;
  s.sample_rate = cfg.sample_rate;
  s.padding = dsp::Padding::kCausal;
  return s;
}

Tensor input_features(const Tensor& spectrum, Real compression) {
  check_shape(spectrum.rank() == 4 && spectrum.dim(3) == 2,
              "input_features expects a (batch, frames, bins, 2) spectrum");
  const Index batch = spectrum.dim(0), frames = spectrum.dim(1), bins = spectrum.dim(2);
  Tensor out({batch, 1, frames, bins});
  for (Index i = 0; i < out.numel(); ++i)
    out[i] = compressed_magnitude(spectrum[2 * i], spectrum[2 * i + 1], compression);
  return out;
}

Var enhance_batch(const Generator& gen, const Tensor& noisy) {
  const ModelConfig& cfg = gen.config();
  check_shape(noisy.rank() == 2 && noisy.dim(1) >= 1, "enhance expects (batch, samples)");
  const Index length = noisy.dim(1);
  const Index extra = cfg.lookahead * cfg.hop;
  const dsp::StftConfig stft_cfg = analysis_config(cfg);
  const Tensor spectrum = dsp::stft_batch(extra > 0 ? padded_batch(noisy, extra) : noisy, stft_cfg);
  const Index batch = spectrum.dim(0), frames = spectrum.dim(1), bins = spectrum.dim(2);
  const Real c = static_cast<Real>(cfg.compression);

  Var mask = gen.forward(constant(input_features(spectrum, c)));
  Var linear = ops::reshape(ops::power(mask, Real{1} / c), {batch, frames, bins});
  Var wave = ops::istft(ops::apply_mask(linear, spectrum), stft_cfg, length + extra);
  return extra > 0 ? ops::crop_last(wave, length) : wave;
}

std::vector<Real> enhance_offline(const Generator& gen, std::span<const Real> noisy,
                                  int sample_rate) {
  if (sample_rate != gen.config().sample_rate)
    throw ConfigError("expected " + std::to_string(gen.config().sample_rate) +
                      " Hz audio, got " + std::to_string(sample_rate) + " Hz");
  for (Real v : noisy)
    if (!std::isfinite(v)) throw NumericError("input contains non-finite samples");
  NoGradGuard no_grad;
  Var out = enhance_batch(gen, as_batch(noisy));
  return std::move(out.mutable_value().storage());
}

Tensor linear_mask(const Generator& gen, std::span<const Real> noisy) {
  NoGradGuard no_grad;
  const ModelConfig& cfg = gen.config();
  const Tensor x = as_batch(noisy);
  const Tensor spectrum =
      dsp::stft_batch(padded_batch(x, cfg.lookahead * cfg.hop), analysis_config(cfg));
  const Real c = static_cast<Real>(cfg.compression);
  Var mask = gen.forward(constant(input_features(spectrum, c)));
  Tensor out = ops::power(mask, Real{1} / c).value();
  return std::move(out).reshape({spectrum.dim(1), spectrum.dim(2)});
}

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
