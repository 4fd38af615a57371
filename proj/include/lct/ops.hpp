// SPDX-License-Identifier: Apache-2.0
//
// Differentiable tensor operations. Shapes must match exactly; there is no
// implicit broadcasting. Optional bias arguments may be an empty Var.

#pragma once

#include <array>

#include "lct/autograd.hpp"
#include "lct/dsp/stft.hpp"
#include "lct/kernels/kernels.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace ops {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, Real factor);
Var sum(const Var& a);
Var mean(const Var& a);

Var leaky_relu(const Var& a, Real alpha);
Var sigmoid(const Var& a);
/// a^exponent for a > 0.
Var power(const Var& a, Real exponent);

Var reshape(const Var& a, Shape shape);
/// Axis permutation of a rank-4 tensor: out.dim(i) == a.dim(perm[i]).
Var permute(const Var& a, std::array<int, 4> perm);
/// Concatenation of two rank-4 tensors along axis 1.
Var concat_channels(const Var& a, const Var& b);

Var linear(const Var& x, const Var& weight, const Var& bias);
Var conv2d(const Var& x, const Var& weight, const Var& bias, const kernels::ConvGeometry& g);
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias,
                     const kernels::ConvGeometry& g);
Var layer_norm(const Var& x, const Var& gain, const Var& bias);
/// Grouped GRU over (N, S, F) from a zero initial state.
Var gru(const Var& x, const Var& w_ih, const Var& w_hh, const Var& bias);
Var attention(const Var& q, const Var& k, const Var& v, Index heads,
              const kernels::TrapezoidMask& mask);

/// w = g * v / ||v|| with one norm per slice along axis 0.
Var weight_norm(const Var& direction, const Var& magnitude);
/// Mean of adjacent pairs along the last axis; an odd trailing sample is dropped.
Var avg_pool2_last(const Var& x);
/// Reflect-pads a (B, N) signal on the right.
Var reflect_pad_right(const Var& x, Index amount);
/// Keeps the first `length` samples of each row of a (B, N) signal.
Var crop_last(const Var& x, Index length);

/// (B, N) waveform -> (B, frames, bins, 2) spectrum.
Var stft(const Var& waves, const dsp::StftConfig& cfg);
/// (B, frames, bins, 2) spectrum -> (B, length) waveform.
Var istft(const Var& spec, const dsp::StftConfig& cfg, Index length);
/// Real mask (B, frames, bins) times a fixed complex spectrum (B, frames, bins, 2).
Var apply_mask(const Var& mask, const Tensor& spectrum);

/// mean((a - target)^2)
Var mse_to(const Var& a, Real target);
/// mean(|a - b|)
Var mean_abs_diff(const Var& a, const Var& b);

/// Small constant added to |S|^2 before raising it to a fractional power.
inline constexpr double kPowerFloor = 1e-12;

/// (1-beta) * mean((|A|^c - |B|^c)^2) + beta * mean(|A|A|^(c-1) - B|B|^(c-1)|^2)
/// over all (batch, frame, bin) cells; B is a fixed reference.
Var compressed_spectral_loss(const Var& estimate, const Tensor& reference, Real compression,
                             Real phase_blend);

}  // namespace ops
}  // namespace LCT_PRECISION_NS
}  // namespace lct
