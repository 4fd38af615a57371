// SPDX-License-Identifier: Apache-2.0
//
// Straightforward serial loop implementations of the forward kernels. They are
// slow and kept only as an independent check on kernels.hpp.

#pragma once

#include "lct/kernels/kernels.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace reference {

/// Additive logit used for masked keys in the dense reference attention.
inline constexpr double kMaskedLogit = -1e9;

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias,
              const kernels::ConvGeometry& g);
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor* bias,
                        const kernels::ConvGeometry& g);
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor* bias);
Tensor gru(const Tensor& x, const Tensor& h0, const Tensor& w_ih, const Tensor& w_hh,
           const Tensor& bias);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, Index heads,
                 const kernels::TrapezoidMask& mask);

}  // namespace reference
}  // namespace LCT_PRECISION_NS
}  // namespace lct
