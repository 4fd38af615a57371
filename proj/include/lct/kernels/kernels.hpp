// SPDX-License-Identifier: Apache-2.0
//
// Forward/backward compute kernels. Batch-like outer loops are OpenMP
// parallel and the inner products go through Eigen GEMM. Serial, loop-level
// versions of the forward passes live in reference.hpp for cross-checking.
//
// Backward kernels accumulate (+=) into whichever gradient pointers are
// non-null.

#pragma once

#include <vector>

#include "lct/tensor.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace kernels {

/// Kernel/stride/padding of a 2-D convolution over (time|height, freq|width).
/// For transposed convolutions the paddings are crops of the full output.
struct ConvGeometry {
  Index kernel_h = 1;
  Index kernel_w = 1;
  Index stride_h = 1;
  Index stride_w = 1;
  Index pad_top = 0;
  Index pad_bottom = 0;
  Index pad_left = 0;
  Index pad_right = 0;
  Index groups = 1;
};

Index conv_out_size(Index in, Index kernel, Index stride, Index pad_lo, Index pad_hi);
Index conv_transpose_out_size(Index in, Index kernel, Index stride, Index crop_lo, Index crop_hi);

// input (B, Cin, H, W); weight (Cout, Cin/groups, KH, KW); bias (Cout) or null.
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor* bias,
                      const ConvGeometry& g);
void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out,
                     const ConvGeometry& g, Tensor* grad_input, Tensor* grad_weight,
                     Tensor* grad_bias);

// input (B, Cin, H, W); weight (Cin, Cout, KH, KW); bias (Cout) or null.
// groups must be 1.
Tensor conv_transpose2d_forward(const Tensor& input, const Tensor& weight, const Tensor* bias,
                                const ConvGeometry& g);
void conv_transpose2d_backward(const Tensor& input, const Tensor& weight,
                               const Tensor& grad_out, const ConvGeometry& g,
                               Tensor* grad_input, Tensor* grad_weight, Tensor* grad_bias);

// x (M, in) viewed row-major; weight (out, in); bias (out) or null -> (M, out).
Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor* bias);
void linear_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                     Tensor* grad_x, Tensor* grad_weight, Tensor* grad_bias);

/// Activations saved by the GRU forward pass, each (N, S, H).
struct GruCache {
  Tensor reset;
  Tensor update;
  Tensor candidate;
  Tensor hidden_candidate;  // W_hn h_{t-1}, before the reset gate
};

// Grouped GRU over N independent sequences of length S.
// x (N, S, F); h0 (N, H); w_ih (G, 3H/G, F/G); w_hh (G, 3H/G, H/G); bias (G, 3H/G).
// Gate row order inside each group block is reset, update, candidate.
// Returns the hidden sequence (N, S, H).
Tensor gru_forward(const Tensor& x, const Tensor& h0, const Tensor& w_ih, const Tensor& w_hh,
                   const Tensor& bias, GruCache* cache);
void gru_backward(const Tensor& x, const Tensor& h0, const Tensor& w_ih, const Tensor& w_hh,
                  const Tensor& y, const GruCache& cache, const Tensor& grad_y,
                  Tensor* grad_x, Tensor* grad_h0, Tensor* grad_w_ih, Tensor* grad_w_hh,
                  Tensor* grad_bias);

struct LayerNormCache {
  Tensor normalized;  // (M, D)
  Tensor inv_std;     // (M)
};

inline constexpr double kLayerNormEps = 1e-5;

// Normalises each row of x (M, D) over D.
Tensor layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias,
                          LayerNormCache* cache);
void layer_norm_backward(const Tensor& gain, const LayerNormCache& cache,
                         const Tensor& grad_out, Tensor* grad_x, Tensor* grad_gain,
                         Tensor* grad_bias);

/// Banded attention window: query i sees keys
/// max(0, i - context + 1) .. i + lookahead (both clipped to the sequence).
/// context == 0 means unbounded past, lookahead < 0 unbounded future.
struct TrapezoidMask {
  Index context = 0;
  Index lookahead = -1;

  static TrapezoidMask unbounded() { return {}; }
  static TrapezoidMask causal(Index context_frames, Index lookahead_frames) {
    return {context_frames, lookahead_frames};
  }
  Index first_key(Index query) const;
  Index last_key(Index query, Index seq_len) const;
  bool allows(Index query, Index key, Index seq_len) const {
    return key >= first_key(query) && key <= last_key(query, seq_len);
  }
};

struct AttentionCache {
  std::vector<Real> probs;       // softmax weights, window-packed
  std::vector<Index> row_offset;  // per (n, head, query) start into probs
};

/// Scaled dot-product attention for one query row against `count` keys.
/// keys/values advance by `stride` elements per key. probs may be null.
void attend_row(const Real* query, const Real* keys, const Real* values, Index stride,
                Index count, Index head_dim, Real* out, Real* probs);

// q, k, v (N, S, D) with D = heads * head_dim -> (N, S, D).
Tensor attention_forward(const Tensor& q, const Tensor& k, const Tensor& v, Index heads,
                         const TrapezoidMask& mask, AttentionCache* cache);
void attention_backward(const Tensor& q, const Tensor& k, const Tensor& v, Index heads,
                        const TrapezoidMask& mask, const AttentionCache& cache,
                        const Tensor& grad_out, Tensor* grad_q, Tensor* grad_k,
                        Tensor* grad_v);

}  // namespace kernels
}  // namespace LCT_PRECISION_NS
}  // namespace lct
