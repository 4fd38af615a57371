// SPDX-License-Identifier: Apache-2.0

#include "lct/model/stream.hpp"

#include <algorithm>
#include <cmath>

#include "lct/model/enhance.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {
namespace {

std::size_t tensor_bytes(const Tensor& t) { return static_cast<std::size_t>(t.numel()) * sizeof(Real); }

// Drops the oldest frame of a (1, C, H, W) history and appends `frame` (1, C, 1, W).
void shift_history(Tensor& history, const Tensor& frame) {
  const Index channels = history.dim(1), height = history.dim(2), width = history.dim(3);
  if (height == 0) return;
  for (Index c = 0; c < channels; ++c) {
    Real* h = history.data() + c * height * width;
    std::copy(h + width, h + height * width, h);
    std::copy_n(frame.data() + c * width, width, h + (height - 1) * width);
  }
}

// (1, C, H, W) history followed by (1, C, 1, W) frame -> (1, C, H + 1, W).
Tensor stack_time(const Tensor& history, const Tensor& frame) {
  const Index channels = frame.dim(1), height = history.dim(2), width = frame.dim(3);
  Tensor out({1, channels, height + 1, width});
  for (Index c = 0; c < channels; ++c) {
    std::copy_n(history.data() + c * height * width, height * width,
                out.data() + c * (height + 1) * width);
    std::copy_n(frame.data() + c * width, width, out.data() + (c * (height + 1) + height) * width);
  }
  return out;
}

Var as_var(Tensor t) { return constant(std::move(t)); }

}  // namespace

std::size_t StreamState::memory_bytes() const {
  std::size_t total = (input_tail.capacity() + output_tail.capacity()) * sizeof(Real);
  for (const auto& t : encoder_history) total += tensor_bytes(t);
  for (const auto& t : decoder_history) total += tensor_bytes(t);
  for (const auto& t : skip_delay) total += tensor_bytes(t);
  total += tensor_bytes(spectrum_delay);
  for (const auto& b : time_blocks)
    total += tensor_bytes(b.hidden) + tensor_bytes(b.keys) + tensor_bytes(b.values) +
             tensor_bytes(b.pending);
  return total;
}

StreamEnhancer::StreamEnhancer(const Generator& gen) : gen_(&gen) {
  const ModelConfig& cfg = gen.config();
  const dsp::StftConfig stft_cfg = analysis_config(cfg);
  window_ = dsp::make_window(stft_cfg);
  fft_ = std::make_unique<dsp::RealFft>(cfg.fft_size);
  // Interior squared-window overlap-add sum, accumulated in the same order
  // as the offline synthesis (earlier frame first).
  envelope_.resize(static_cast<std::size_t>(cfg.hop));
  for (Index j = 0; j < cfg.hop; ++j) {
    double e = 0;
    const double late = window_[static_cast<std::size_t>(j + cfg.hop)];
    const double early = window_[static_cast<std::size_t>(j)];
    e += late * late;
    e += early * early;
    envelope_[static_cast<std::size_t>(j)] = e;
  }
  reset();
}

void StreamEnhancer::reset() {
  const ModelConfig& cfg = gen_->config();
  const auto ladder = cfg.freq_ladder();
  const Index history = cfg.kernel_time - 1;
  const Index delay = cfg.lookahead + 1;
  StreamState s;
  s.input_tail.assign(static_cast<std::size_t>(cfg.fft_size - cfg.hop), Real{0});
  s.output_tail.assign(static_cast<std::size_t>(cfg.hop), Real{0});
  Index in = 1;
  for (std::size_t i = 0; i < cfg.encoder_channels.size(); ++i) {
    s.encoder_history.emplace_back(Shape{1, in, history, ladder[i]});
    s.skip_delay.emplace_back(Shape{delay, cfg.encoder_channels[i], ladder[i + 1]});
    in = cfg.encoder_channels[i];
  }
  const std::size_t layers = cfg.encoder_channels.size();
  Index prev = cfg.bottleneck_width();
  for (std::size_t i = 0; i < layers; ++i) {
    const Index mirrored = cfg.encoder_channels[layers - 1 - i];
    s.decoder_history.emplace_back(Shape{1, prev + mirrored, history, ladder[layers - i]});
    prev = cfg.decoder_channels[i];
  }
  s.spectrum_delay = Tensor({delay, cfg.bins(), 2});
  const Index positions = cfg.bottleneck_bins(), width = cfg.bottleneck_width();
  const Index first_t = cfg.first_time_block();
  for (std::size_t b = 0; b < cfg.bottleneck.size(); ++b) {
    TimeBlockState t;
    if (cfg.bottleneck[b] == 'T') {
      const Index la = static_cast<Index>(b) == first_t ? cfg.lookahead : 0;
      // Without the diagnostic mask the block is non-causal and cannot stream.
      check_config(cfg.time_mask_enabled, "streaming requires the time attention mask");
      t.capacity = cfg.context_frames + la;
      t.hidden = Tensor({positions, width});
      t.keys = Tensor({2 * t.capacity, positions, width});
      t.values = Tensor({2 * t.capacity, positions, width});
      t.pending = Tensor({la + 1, positions, width});
    }
    s.time_blocks.push_back(std::move(t));
  }
  state_ = std::move(s);
}

Tensor StreamEnhancer::analyse(std::span<const Real> chunk) {
  const ModelConfig& cfg = gen_->config();
  const Index lead = cfg.fft_size - cfg.hop;
  std::vector<Real> frame(static_cast<std::size_t>(cfg.fft_size));
  for (Index j = 0; j < cfg.fft_size; ++j) {
    const Real x = j < lead ? state_.input_tail[static_cast<std::size_t>(j)]
                            : chunk[static_cast<std::size_t>(j - lead)];
    frame[static_cast<std::size_t>(j)] = x * window_[static_cast<std::size_t>(j)];
  }
  // Keep the most recent `lead` samples for the next frame.
  std::vector<Real> joined(state_.input_tail);
  joined.insert(joined.end(), chunk.begin(), chunk.end());
  std::copy(joined.end() - lead, joined.end(), state_.input_tail.begin());

  Tensor spectrum({cfg.bins(), 2});
  fft_->forward(frame.data(), spectrum.data());
  return spectrum;
}

Tensor StreamEnhancer::encoder_step(std::size_t layer, const Tensor& frame) {
  const ModelConfig& cfg = gen_->config();
  const nn::Conv2d& conv = gen_->encoder()[layer];
  kernels::ConvGeometry g = conv.geometry;
  g.pad_top = 0;
  Tensor& history = state_.encoder_history[layer];
  Tensor out = ops::leaky_relu(ops::conv2d(as_var(stack_time(history, frame)), conv.weight,
                                           conv.bias, g),
                               static_cast<Real>(cfg.leaky_slope))
                   .value();
  shift_history(history, frame);
  return out;
}

Tensor StreamEnhancer::decoder_step(std::size_t layer, const Tensor& frame) {
  const nn::ConvTranspose2d& conv = gen_->decoder()[layer];
  kernels::ConvGeometry g = conv.geometry;
  g.pad_top = conv.geometry.pad_bottom;
  Tensor& history = state_.decoder_history[layer];
  Tensor out =
      ops::conv_transpose2d(as_var(stack_time(history, frame)), conv.weight, conv.bias, g).value();
  shift_history(history, frame);
  return out;
}

bool StreamEnhancer::time_block_step(std::size_t block, Tensor& frame) {
  const TransformerBlock& tb = gen_->blocks()[block];
  TimeBlockState& st = state_.time_blocks[block];
  const Index width = frame.dim(1), positions = frame.dim(3);
  const Index t = st.frames++;
  const Index la = st.pending.dim(0) - 1;

  // (1, C, 1, P) -> (P, 1, C)
  Tensor seq({positions, 1, width});
  for (Index c = 0; c < width; ++c)
    for (Index p = 0; p < positions; ++p) seq[p * width + c] = frame[c * positions + p];

  Tensor gru_out = kernels::gru_forward(seq, st.hidden, tb.gru.w_ih.value(), tb.gru.w_hh.value(),
                                        tb.gru.bias.value(), nullptr);
  std::copy_n(gru_out.data(), gru_out.numel(), st.hidden.data());
  Tensor residual = gru_out;
  residual.add_(seq);
  Tensor h = kernels::layer_norm_forward(residual.reshape({positions, width}),
                                         tb.norm1.gain.value(), tb.norm1.bias.value(), nullptr);

  const auto& mha = tb.attention;
  Tensor k = kernels::linear_forward(h, mha.key.weight.value(), &mha.key.bias.value());
  Tensor v = kernels::linear_forward(h, mha.value.weight.value(), &mha.value.bias.value());
  const Index plane = positions * width;
  const Index slot = t % st.capacity;
  for (Index copy : {slot, slot + st.capacity}) {
    std::copy_n(k.data(), plane, st.keys.data() + copy * plane);
    std::copy_n(v.data(), plane, st.values.data() + copy * plane);
  }
  std::copy_n(h.data(), plane, st.pending.data() + (t % (la + 1)) * plane);
  if (t < la) return false;

  const Index m = t - la;
  Tensor hm({positions, width});
  std::copy_n(st.pending.data() + (m % (la + 1)) * plane, plane, hm.data());
  Tensor q = kernels::linear_forward(hm, mha.query.weight.value(), &mha.query.bias.value());

  const Index count = std::min(t + 1, st.capacity);
  const Index start = (t - count + 1) % st.capacity;
  const Index heads = mha.heads, head_dim = width / heads;
  Tensor mixed({positions, width});
  for (Index p = 0; p < positions; ++p)
    for (Index hd = 0; hd < heads; ++hd) {
      const Index off = p * width + hd * head_dim;
      kernels::attend_row(q.data() + off, st.keys.data() + start * plane + off,
                          st.values.data() + start * plane + off, plane, count, head_dim,
                          mixed.data() + off, nullptr);
    }
  Tensor o = kernels::linear_forward(mixed, mha.output.weight.value(), &mha.output.bias.value());
  o.add_(hm);
  Tensor y = kernels::layer_norm_forward(o, tb.norm2.gain.value(), tb.norm2.bias.value(), nullptr);

  // (P, C) -> (1, C, 1, P)
  for (Index c = 0; c < width; ++c)
    for (Index p = 0; p < positions; ++p) frame[c * positions + p] = y[p * width + c];
  return true;
}

std::vector<Real> StreamEnhancer::synthesise(const Tensor* mask_frame, Index out_frame) {
  const ModelConfig& cfg = gen_->config();
  const Index hop = cfg.hop, bins = cfg.bins();
  std::vector<Real> out(static_cast<std::size_t>(hop), Real{0});
  if (!mask_frame) return out;

  const Index delay = cfg.lookahead + 1;
  const Real* spectrum = state_.spectrum_delay.data() + (out_frame % delay) * bins * 2;
  std::vector<Real> masked(static_cast<std::size_t>(bins * 2));
  for (Index k = 0; k < bins; ++k) {
    const Real m = (*mask_frame)[k];
    masked[static_cast<std::size_t>(2 * k)] = m * spectrum[2 * k];
    masked[static_cast<std::size_t>(2 * k + 1)] = m * spectrum[2 * k + 1];
  }
  std::vector<Real> frame(static_cast<std::size_t>(cfg.fft_size));
  fft_->inverse(masked.data(), frame.data());
  const Real norm = Real{1} / static_cast<Real>(cfg.fft_size);
  for (Index j = 0; j < cfg.fft_size; ++j)
    frame[static_cast<std::size_t>(j)] =
        frame[static_cast<std::size_t>(j)] * norm * window_[static_cast<std::size_t>(j)];

  if (out_frame >= 1) {
    for (Index j = 0; j < hop; ++j) {
      const Real y = state_.output_tail[static_cast<std::size_t>(j)] + frame[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(j)] =
          static_cast<Real>(y / envelope_[static_cast<std::size_t>(j)]);
    }
  }
  for (Index j = 0; j < hop; ++j)
    state_.output_tail[static_cast<std::size_t>(j)] = Real{0} + frame[static_cast<std::size_t>(j + hop)];
  return out;
}

std::vector<Real> StreamEnhancer::push(std::span<const Real> chunk) {
  const ModelConfig& cfg = gen_->config();
  check_shape(static_cast<Index>(chunk.size()) == cfg.hop,
              "stream push expects exactly " + std::to_string(cfg.hop) + " samples, got " +
                  std::to_string(chunk.size()));
  NoGradGuard no_grad;
  const Index t = state_.frames++;
  const Index delay = cfg.lookahead + 1;
  const Index bins = cfg.bins();
  const Real c = static_cast<Real>(cfg.compression);

  Tensor spectrum = analyse(chunk);
  std::copy_n(spectrum.data(), bins * 2, state_.spectrum_delay.data() + (t % delay) * bins * 2);

  Tensor x({1, 1, 1, bins});
  for (Index k = 0; k < bins; ++k) x[k] = compressed_magnitude(spectrum[2 * k], spectrum[2 * k + 1], c);
  const std::size_t layers = gen_->encoder().size();
  for (std::size_t i = 0; i < layers; ++i) {
    x = encoder_step(i, x);
    Tensor skip = gen_->skips()[i](as_var(x)).value();
    Tensor& ring = state_.skip_delay[i];
    const Index plane = ring.dim(1) * ring.dim(2);
    std::copy_n(skip.data(), plane, ring.data() + (t % delay) * plane);
  }

  bool ready = true;
  for (std::size_t b = 0; b < gen_->blocks().size() && ready; ++b) {
    if (gen_->blocks()[b].axis == 'F')
      x = gen_->blocks()[b](as_var(x)).value();
    else
      ready = time_block_step(b, x);
  }
  if (!ready) return synthesise(nullptr, 0);

  const Index m = t - cfg.lookahead;
  for (std::size_t i = 0; i < layers; ++i) {
    const Tensor& ring = state_.skip_delay[layers - 1 - i];
    const Index plane = ring.dim(1) * ring.dim(2);
    Tensor skip({1, ring.dim(1), 1, ring.dim(2)});
    std::copy_n(ring.data() + (m % delay) * plane, plane, skip.data());
    x = decoder_step(i, ops::concat_channels(as_var(x), as_var(skip)).value());
    x = i + 1 < layers ? ops::leaky_relu(as_var(x), static_cast<Real>(cfg.leaky_slope)).value()
                       : ops::sigmoid(as_var(x)).value();
  }
  Tensor mask = ops::power(as_var(x), Real{1} / c).value();
  return synthesise(&mask, m);
}

std::vector<Real> StreamEnhancer::flush() {
  const Index drain = gen_->config().lookahead + 1;
  std::vector<Real> silence(static_cast<std::size_t>(hop()), Real{0});
  std::vector<Real> out;
  for (Index i = 0; i < drain; ++i) {
    auto part = push(silence);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<Real> enhance_streaming(const Generator& gen, std::span<const Real> noisy) {
  StreamEnhancer stream(gen);
  const Index hop = stream.hop();
  const Index length = static_cast<Index>(noisy.size());
  std::vector<Real> padded(noisy.begin(), noisy.end());
  padded.resize(static_cast<std::size_t>((length + hop - 1) / hop * hop), Real{0});
  std::vector<Real> out;
  out.reserve(padded.size() + static_cast<std::size_t>(stream.delay_samples()));
  for (std::size_t i = 0; i < padded.size(); i += static_cast<std::size_t>(hop)) {
    auto part = stream.push(std::span<const Real>(padded).subspan(i, static_cast<std::size_t>(hop)));
    out.insert(out.end(), part.begin(), part.end());
  }
  auto tail = stream.flush();
  out.insert(out.end(), tail.begin(), tail.end());
  const auto delay = static_cast<std::ptrdiff_t>(stream.delay_samples());
  return std::vector<Real>(out.begin() + delay, out.begin() + delay + length);
}

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
