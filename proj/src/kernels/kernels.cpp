// SPDX-License-Identifier: Apache-2.0

#include "lct/kernels/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace kernels {
namespace {

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using StridedMap = Eigen::Map<Mat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const Mat, 0, Eigen::OuterStride<>>;

inline Real sigmoid(Real x) { return Real{1} / (Real{1} + std::exp(-x)); }

// Row-by-row accumulation keeps bias gradients independent of buffer
// alignment, which Eigen's vectorised partial reductions are not.
void add_column_sums(const Real* m, Index rows, Index cols, Real* out) {
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) out[c] += m[r * cols + c];
}

// Column matrix (C*KH*KW, Ho*Wo) of an image (C, H, W).
void im2col(const Real* img, Index channels, Index height, Index width, const ConvGeometry& g,
            Index out_h, Index out_w, Real* col) {
  const Index positions = out_h * out_w;
  for (Index c = 0; c < channels; ++c) {
    for (Index kh = 0; kh < g.kernel_h; ++kh) {
      for (Index kw = 0; kw < g.kernel_w; ++kw) {
        Real* row = col + ((c * g.kernel_h + kh) * g.kernel_w + kw) * positions;
        for (Index oh = 0; oh < out_h; ++oh) {
          const Index ih = oh * g.stride_h - g.pad_top + kh;
          Real* dst = row + oh * out_w;
          if (ih < 0 || ih >= height) {
            std::fill(dst, dst + out_w, Real{0});
            continue;
          }
          const Real* src = img + (c * height + ih) * width;
          for (Index ow = 0; ow < out_w; ++ow) {
            const Index iw = ow * g.stride_w - g.pad_left + kw;
            dst[ow] = (iw >= 0 && iw < width) ? src[iw] : Real{0};
          }
        }
      }
    }
  }
}

// Scatter-add of a column matrix back onto an image; adjoint of im2col.
void col2im(const Real* col, Index channels, Index height, Index width, const ConvGeometry& g,
            Index out_h, Index out_w, Real* img) {
  const Index positions = out_h * out_w;
  for (Index c = 0; c < channels; ++c) {
    for (Index kh = 0; kh < g.kernel_h; ++kh) {
      for (Index kw = 0; kw < g.kernel_w; ++kw) {
        const Real* row = col + ((c * g.kernel_h + kh) * g.kernel_w + kw) * positions;
        for (Index oh = 0; oh < out_h; ++oh) {
          const Index ih = oh * g.stride_h - g.pad_top + kh;
          if (ih < 0 || ih >= height) continue;
          Real* dst = img + (c * height + ih) * width;
          const Real* src = row + oh * out_w;
          for (Index ow = 0; ow < out_w; ++ow) {
            const Index iw = ow * g.stride_w - g.pad_left + kw;
            if (iw >= 0 && iw < width) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

void add_channel_bias(Real* out, const Tensor& bias, Index batch, Index channels,
                      Index positions) {
  for (Index b = 0; b < batch; ++b)
    for (Index c = 0; c < channels; ++c) {
      Real* p = out + (b * channels + c) * positions;
      const Real v = bias[c];
      for (Index i = 0; i < positions; ++i) p[i] += v;
    }
}

void accumulate_channel_bias_grad(const Tensor& grad_out, Tensor* grad_bias) {
  const Index batch = grad_out.dim(0), channels = grad_out.dim(1);
  const Index positions = grad_out.dim(2) * grad_out.dim(3);
  for (Index c = 0; c < channels; ++c) {
    Real acc = 0;
    for (Index b = 0; b < batch; ++b) {
      const Real* p = grad_out.data() + (b * channels + c) * positions;
      for (Index i = 0; i < positions; ++i) acc += p[i];
    }
    (*grad_bias)[c] += acc;
  }
}

}  // namespace

Index conv_out_size(Index in, Index kernel, Index stride, Index pad_lo, Index pad_hi) {
  const Index span = in + pad_lo + pad_hi - kernel;
  check_shape(span >= 0 && stride > 0,
              "convolution input of size " + std::to_string(in) + " too small for kernel " +
                  std::to_string(kernel));
  return span / stride + 1;
}

Index conv_transpose_out_size(Index in, Index kernel, Index stride, Index crop_lo,
                              Index crop_hi) {
  const Index full = (in - 1) * stride + kernel;
  check_shape(full - crop_lo - crop_hi > 0, "transposed convolution crops exceed output");
  return full - crop_lo - crop_hi;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor* bias,
                      const ConvGeometry& g) {
  check_shape(input.rank() == 4 && weight.rank() == 4, "conv2d expects rank-4 input and weight");
  const Index batch = input.dim(0), cin = input.dim(1), height = input.dim(2),
              width = input.dim(3);
  const Index cout = weight.dim(0), cin_g = weight.dim(1);
  check_shape(g.groups >= 1 && cin_g * g.groups == cin && cout % g.groups == 0,
              "conv2d channel mismatch: input has " + std::to_string(cin) +
                  " channels, weight expects " + std::to_string(cin_g * g.groups));
  check_shape(weight.dim(2) == g.kernel_h && weight.dim(3) == g.kernel_w,
              "conv2d weight kernel does not match geometry");
  check_shape(!bias || bias->numel() == cout, "conv2d bias size mismatch");
  const Index out_h = conv_out_size(height, g.kernel_h, g.stride_h, g.pad_top, g.pad_bottom);
  const Index out_w = conv_out_size(width, g.kernel_w, g.stride_w, g.pad_left, g.pad_right);
  const Index positions = out_h * out_w;
  const Index patch = cin_g * g.kernel_h * g.kernel_w;
  const Index cout_g = cout / g.groups;

  Tensor out({batch, cout, out_h, out_w});
#pragma omp parallel
  {
    std::vector<Real> col(static_cast<std::size_t>(patch * positions));
#pragma omp for schedule(static)
    for (Index b = 0; b < batch; ++b) {
      for (Index grp = 0; grp < g.groups; ++grp) {
        im2col(input.data() + (b * cin + grp * cin_g) * height * width, cin_g, height, width,
               g, out_h, out_w, col.data());
        MatMap(out.data() + (b * cout + grp * cout_g) * positions, cout_g, positions).noalias() =
            ConstMatMap(weight.data() + grp * cout_g * patch, cout_g, patch) *
            ConstMatMap(col.data(), patch, positions);
      }
    }
  }
  if (bias) add_channel_bias(out.data(), *bias, batch, cout, positions);
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_out,
                     const ConvGeometry& g, Tensor* grad_input, Tensor* grad_weight,
                     Tensor* grad_bias) {
  const Index batch = input.dim(0), cin = input.dim(1), height = input.dim(2),
              width = input.dim(3);
  const Index cout = weight.dim(0), cin_g = weight.dim(1);
  const Index out_h = grad_out.dim(2), out_w = grad_out.dim(3);
  const Index positions = out_h * out_w;
  const Index patch = cin_g * g.kernel_h * g.kernel_w;
  const Index cout_g = cout / g.groups;

  if (grad_bias) accumulate_channel_bias_grad(grad_out, grad_bias);

  if (grad_weight) {
    std::vector<Real> col(static_cast<std::size_t>(patch * positions));
    for (Index b = 0; b < batch; ++b) {
      for (Index grp = 0; grp < g.groups; ++grp) {
        im2col(input.data() + (b * cin + grp * cin_g) * height * width, cin_g, height, width,
               g, out_h, out_w, col.data());
        MatMap(grad_weight->data() + grp * cout_g * patch, cout_g, patch).noalias() +=
            ConstMatMap(grad_out.data() + (b * cout + grp * cout_g) * positions, cout_g,
                        positions) *
            ConstMatMap(col.data(), patch, positions).transpose();
      }
    }
  }

  if (grad_input) {
#pragma omp parallel
    {
      std::vector<Real> col(static_cast<std::size_t>(patch * positions));
#pragma omp for schedule(static)
      for (Index b = 0; b < batch; ++b) {
        for (Index grp = 0; grp < g.groups; ++grp) {
          MatMap(col.data(), patch, positions).noalias() =
              ConstMatMap(weight.data() + grp * cout_g * patch, cout_g, patch).transpose() *
              ConstMatMap(grad_out.data() + (b * cout + grp * cout_g) * positions, cout_g,
                          positions);
          col2im(col.data(), cin_g, height, width, g, out_h, out_w,
                 grad_input->data() + (b * cin + grp * cin_g) * height * width);
        }
      }
    }
  }
}

Tensor conv_transpose2d_forward(const Tensor& input, const Tensor& weight, const Tensor* bias,
                                const ConvGeometry& g) {
  check_shape(input.rank() == 4 && weight.rank() == 4,
              "conv_transpose2d expects rank-4 input and weight");
  check_shape(g.groups == 1, "grouped transposed convolution is not supported");
  const Index batch = input.dim(0), cin = input.dim(1), height = input.dim(2),
              width = input.dim(3);
  check_shape(weight.dim(0) == cin,
              "conv_transpose2d channel mismatch: input has " + std::to_string(cin) +
                  " channels, weight expects " + std::to_string(weight.dim(0)));
  check_shape(weight.dim(2) == g.kernel_h && weight.dim(3) == g.kernel_w,
              "conv_transpose2d weight kernel does not match geometry");
  const Index cout = weight.dim(1);
  check_shape(!bias || bias->numel() == cout, "conv_transpose2d bias size mismatch");
  const Index out_h =
      conv_transpose_out_size(height, g.kernel_h, g.stride_h, g.pad_top, g.pad_bottom);
  const Index out_w =
      conv_transpose_out_size(width, g.kernel_w, g.stride_w, g.pad_left, g.pad_right);
  const Index in_pos = height * width;
  const Index patch = cout * g.kernel_h * g.kernel_w;

  Tensor out({batch, cout, out_h, out_w});
#pragma omp parallel
  {
    std::vector<Real> col(static_cast<std::size_t>(patch * in_pos));
#pragma omp for schedule(static)
    for (Index b = 0; b < batch; ++b) {
      MatMap(col.data(), patch, in_pos).noalias() =
          ConstMatMap(weight.data(), cin, patch).transpose() *
          ConstMatMap(input.data() + b * cin * in_pos, cin, in_pos);
      col2im(col.data(), cout, out_h, out_w, g, height, width,
             out.data() + b * cout * out_h * out_w);
    }
  }
  if (bias) add_channel_bias(out.data(), *bias, batch, cout, out_h * out_w);
  return out;
}

void conv_transpose2d_backward(const Tensor& input, const Tensor& weight,
                               const Tensor& grad_out, const ConvGeometry& g,
                               Tensor* grad_input, Tensor* grad_weight, Tensor* grad_bias) {
  const Index batch = input.dim(0), cin = input.dim(1), height = input.dim(2),
              width = input.dim(3);
  const Index cout = weight.dim(1);
  const Index out_h = grad_out.dim(2), out_w = grad_out.dim(3);
  const Index in_pos = height * width;
  const Index patch = cout * g.kernel_h * g.kernel_w;

  if (grad_bias) accumulate_channel_bias_grad(grad_out, grad_bias);

  std::vector<Real> cols(static_cast<std::size_t>(batch * patch * in_pos));
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < batch; ++b) {
    im2col(grad_out.data() + b * cout * out_h * out_w, cout, out_h, out_w, g, height, width,
           cols.data() + b * patch * in_pos);
  }
  if (grad_input) {
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < batch; ++b) {
      MatMap(grad_input->data() + b * cin * in_pos, cin, in_pos).noalias() +=
          ConstMatMap(weight.data(), cin, patch) *
          ConstMatMap(cols.data() + b * patch * in_pos, patch, in_pos);
    }
  }
  if (grad_weight) {
    for (Index b = 0; b < batch; ++b) {
      MatMap(grad_weight->data(), cin, patch).noalias() +=
          ConstMatMap(input.data() + b * cin * in_pos, cin, in_pos) *
          ConstMatMap(cols.data() + b * patch * in_pos, patch, in_pos).transpose();
    }
  }
}

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor* bias) {
  const Index in = weight.dim(1), out_features = weight.dim(0);
  check_shape(x.numel() % in == 0 && x.shape().back() == in,
              "linear: input feature size " + std::to_string(x.shape().back()) +
                  " does not match weight " + shape_str(weight.shape()));
  const Index rows = x.numel() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_features;
  Tensor out(out_shape);
  MatMap y(out.data(), rows, out_features);
  y.noalias() = ConstMatMap(x.data(), rows, in) * ConstMatMap(weight.data(), out_features, in).transpose();
  if (bias) {
    check_shape(bias->numel() == out_features, "linear bias size mismatch");
    y.rowwise() += Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>(bias->data(), out_features);
  }
  return out;
}

void linear_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
                     Tensor* grad_x, Tensor* grad_weight, Tensor* grad_bias) {
  const Index in = weight.dim(1), out_features = weight.dim(0);
  const Index rows = x.numel() / in;
  ConstMatMap dy(grad_out.data(), rows, out_features);
  if (grad_x)
    MatMap(grad_x->data(), rows, in).noalias() += dy * ConstMatMap(weight.data(), out_features, in);
  if (grad_weight)
    MatMap(grad_weight->data(), out_features, in).noalias() +=
        dy.transpose() * ConstMatMap(x.data(), rows, in);
  if (grad_bias)
    add_column_sums(grad_out.data(), rows, out_features, grad_bias->data());
}

Tensor gru_forward(const Tensor& x, const Tensor& h0, const Tensor& w_ih, const Tensor& w_hh,
                   const Tensor& bias, GruCache* cache) {
  check_shape(x.rank() == 3 && h0.rank() == 2, "gru expects x (N, S, F) and h0 (N, H)");
  const Index n_seq = x.dim(0), steps = x.dim(1), features = x.dim(2);
  const Index hidden = h0.dim(1);
  const Index groups = w_ih.dim(0);
  check_shape(h0.dim(0) == n_seq, "gru: h0 batch mismatch");
  check_shape(groups >= 1 && features % groups == 0 && hidden % groups == 0,
              "gru: groups must divide feature and hidden sizes");
  const Index fg = features / groups, hg = hidden / groups;
  check_shape(w_ih.dim(1) == 3 * hg && w_ih.dim(2) == fg,
              "gru: input weight shape " + shape_str(w_ih.shape()) + " does not match x " +
                  shape_str(x.shape()));
  check_shape(w_hh.dim(0) == groups && w_hh.dim(1) == 3 * hg && w_hh.dim(2) == hg,
              "gru: recurrent weight shape mismatch");
  check_shape(bias.numel() == groups * 3 * hg, "gru: bias shape mismatch");

  Tensor y({n_seq, steps, hidden});
  if (cache) {
    cache->reset = Tensor({n_seq, steps, hidden});
    cache->update = Tensor({n_seq, steps, hidden});
    cache->candidate = Tensor({n_seq, steps, hidden});
    cache->hidden_candidate = Tensor({n_seq, steps, hidden});
  }
  if (steps == 0) return y;

  const Index g3 = 3 * hg;
  Mat gx(n_seq * steps, g3);
  Mat gh(n_seq, g3);
  Mat h_prev(n_seq, hg);
  for (Index grp = 0; grp < groups; ++grp) {
    ConstMatMap wi(w_ih.data() + grp * g3 * fg, g3, fg);
    ConstMatMap wh(w_hh.data() + grp * g3 * hg, g3, hg);
    const Real* b = bias.data() + grp * g3;
    gx.noalias() = ConstStridedMap(x.data() + grp * fg, n_seq * steps, fg,
                                   Eigen::OuterStride<>(features)) *
                   wi.transpose();
    gx.rowwise() += Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>(b, g3);
    h_prev = ConstStridedMap(h0.data() + grp * hg, n_seq, hg, Eigen::OuterStride<>(hidden));

    for (Index s = 0; s < steps; ++s) {
      gh.noalias() = h_prev * wh.transpose();
#pragma omp parallel for schedule(static)
      for (Index n = 0; n < n_seq; ++n) {
        const Real* gxr = gx.data() + (n * steps + s) * g3;
        const Real* ghr = gh.data() + n * g3;
        Real* hp = h_prev.data() + n * hg;
        const Index off = (n * steps + s) * hidden + grp * hg;
        for (Index j = 0; j < hg; ++j) {
          const Real r = sigmoid(gxr[j] + ghr[j]);
          const Real z = sigmoid(gxr[hg + j] + ghr[hg + j]);
          const Real hn = ghr[2 * hg + j];
          const Real c = std::tanh(gxr[2 * hg + j] + r * hn);
          const Real h = (Real{1} - z) * c + z * hp[j];
          y[off + j] = h;
          if (cache) {
            cache->reset[off + j] = r;
            cache->update[off + j] = z;
            cache->candidate[off + j] = c;
            cache->hidden_candidate[off + j] = hn;
          }
          hp[j] = h;
        }
      }
    }
  }
  return y;
}

void gru_backward(const Tensor& x, const Tensor& h0, const Tensor& w_ih, const Tensor& w_hh,
                  const Tensor& y, const GruCache& cache, const Tensor& grad_y,
                  Tensor* grad_x, Tensor* grad_h0, Tensor* grad_w_ih, Tensor* grad_w_hh,
                  Tensor* grad_bias) {
  const Index n_seq = x.dim(0), steps = x.dim(1), features = x.dim(2);
  const Index hidden = h0.dim(1);
  const Index groups = w_ih.dim(0);
  const Index fg = features / groups, hg = hidden / groups, g3 = 3 * hg;
  if (steps == 0) return;

  Mat dgx(n_seq * steps, g3);
  Mat dgh(n_seq, g3);
  Mat dh(n_seq, hg);
  Mat h_prev(n_seq, hg);
  for (Index grp = 0; grp < groups; ++grp) {
    ConstMatMap wi(w_ih.data() + grp * g3 * fg, g3, fg);
    ConstMatMap wh(w_hh.data() + grp * g3 * hg, g3, hg);
    dh.setZero();
    Mat dwh = Mat::Zero(g3, hg);
    for (Index s = steps - 1; s >= 0; --s) {
      if (s > 0)
        h_prev = ConstStridedMap(y.data() + (s - 1) * hidden + grp * hg, n_seq, hg,
                                 Eigen::OuterStride<>(steps * hidden));
      else
        h_prev = ConstStridedMap(h0.data() + grp * hg, n_seq, hg, Eigen::OuterStride<>(hidden));
#pragma omp parallel for schedule(static)
      for (Index n = 0; n < n_seq; ++n) {
        const Index off = (n * steps + s) * hidden + grp * hg;
        Real* dgxr = dgx.data() + (n * steps + s) * g3;
        Real* dghr = dgh.data() + n * g3;
        Real* dhr = dh.data() + n * hg;
        const Real* hp = h_prev.data() + n * hg;
        for (Index j = 0; j < hg; ++j) {
          const Real d = dhr[j] + grad_y[off + j];
          const Real r = cache.reset[off + j];
          const Real z = cache.update[off + j];
          const Real c = cache.candidate[off + j];
          const Real hn = cache.hidden_candidate[off + j];
          const Real dc_pre = d * (Real{1} - z) * (Real{1} - c * c);
          const Real dz_pre = d * (hp[j] - c) * z * (Real{1} - z);
          const Real dr_pre = dc_pre * hn * r * (Real{1} - r);
          dgxr[j] = dr_pre;
          dgxr[hg + j] = dz_pre;
          dgxr[2 * hg + j] = dc_pre;
          dghr[j] = dr_pre;
          dghr[hg + j] = dz_pre;
          dghr[2 * hg + j] = dc_pre * r;
          dhr[j] = d * z;
        }
      }
      dh.noalias() += dgh * wh;
      dwh.noalias() += dgh.transpose() * h_prev;
    }
    if (grad_h0)
      StridedMap(grad_h0->data() + grp * hg, n_seq, hg, Eigen::OuterStride<>(hidden)) += dh;
    if (grad_w_hh) MatMap(grad_w_hh->data() + grp * g3 * hg, g3, hg) += dwh;
    if (grad_w_ih)
      MatMap(grad_w_ih->data() + grp * g3 * fg, g3, fg).noalias() +=
          dgx.transpose() * ConstStridedMap(x.data() + grp * fg, n_seq * steps, fg,
                                            Eigen::OuterStride<>(features));
    if (grad_bias)
      add_column_sums(dgx.data(), dgx.rows(), g3, grad_bias->data() + grp * g3);
    if (grad_x)
      StridedMap(grad_x->data() + grp * fg, n_seq * steps, fg,
                 Eigen::OuterStride<>(features)).noalias() += dgx * wi;
  }
}

Tensor layer_norm_forward(const Tensor& x, const Tensor& gain, const Tensor& bias,
                          LayerNormCache* cache) {
  const Index width = x.shape().back();
  check_shape(gain.numel() == width && bias.numel() == width,
              "layer_norm: affine size does not match feature size " + std::to_string(width));
  const Index rows = x.numel() / width;
  Tensor out(x.shape());
  if (cache) {
    cache->normalized = Tensor({rows, width});
    cache->inv_std = Tensor({rows});
  }
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    const Real* xr = x.data() + r * width;
    Real mean = 0;
    for (Index j = 0; j < width; ++j) mean += xr[j];
    mean /= static_cast<Real>(width);
    Real var = 0;
    for (Index j = 0; j < width; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<Real>(width);
    const Real inv = Real{1} / std::sqrt(var + static_cast<Real>(kLayerNormEps));
    Real* yr = out.data() + r * width;
    for (Index j = 0; j < width; ++j) {
      const Real xh = (xr[j] - mean) * inv;
      if (cache) cache->normalized[r * width + j] = xh;
      yr[j] = xh * gain[j] + bias[j];
    }
    if (cache) cache->inv_std[r] = inv;
  }
  return out;
}

void layer_norm_backward(const Tensor& gain, const LayerNormCache& cache,
                         const Tensor& grad_out, Tensor* grad_x, Tensor* grad_gain,
                         Tensor* grad_bias) {
  const Index rows = cache.normalized.dim(0), width = cache.normalized.dim(1);
  if (grad_gain || grad_bias) {
    for (Index r = 0; r < rows; ++r) {
      const Real* dy = grad_out.data() + r * width;
      const Real* xh = cache.normalized.data() + r * width;
      for (Index j = 0; j < width; ++j) {
        if (grad_gain) (*grad_gain)[j] += dy[j] * xh[j];
        if (grad_bias) (*grad_bias)[j] += dy[j];
      }
    }
  }
  if (!grad_x) return;
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    const Real* dy = grad_out.data() + r * width;
    const Real* xh = cache.normalized.data() + r * width;
    Real mean_d = 0, mean_dx = 0;
    for (Index j = 0; j < width; ++j) {
      const Real d = dy[j] * gain[j];
      mean_d += d;
      mean_dx += d * xh[j];
    }
    mean_d /= static_cast<Real>(width);
    mean_dx /= static_cast<Real>(width);
    const Real inv = cache.inv_std[r];
    Real* dx = grad_x->data() + r * width;
    for (Index j = 0; j < width; ++j)
      dx[j] += inv * (dy[j] * gain[j] - mean_d - xh[j] * mean_dx);
  }
}

Index TrapezoidMask::first_key(Index query) const {
  return context > 0 ? std::max<Index>(0, query - context + 1) : 0;
}

Index TrapezoidMask::last_key(Index query, Index seq_len) const {
  return lookahead < 0 ? seq_len - 1 : std::min(seq_len - 1, query + lookahead);
}

void attend_row(const Real* query, const Real* keys, const Real* values, Index stride,
                Index count, Index head_dim, Real* out, Real* probs) {
  thread_local std::vector<Real> scratch;
  if (!probs) {
    scratch.resize(static_cast<std::size_t>(count));
    probs = scratch.data();
  }
  const Real scale = Real{1} / std::sqrt(static_cast<Real>(head_dim));
  Real max_logit = -std::numeric_limits<Real>::infinity();
  for (Index j = 0; j < count; ++j) {
    const Real* kj = keys + j * stride;
    Real dot = 0;
    for (Index d = 0; d < head_dim; ++d) dot += query[d] * kj[d];
    probs[j] = dot * scale;
    max_logit = std::max(max_logit, probs[j]);
  }
  Real total = 0;
  for (Index j = 0; j < count; ++j) {
    probs[j] = std::exp(probs[j] - max_logit);
    total += probs[j];
  }
  const Real inv = Real{1} / total;
  for (Index d = 0; d < head_dim; ++d) out[d] = 0;
  for (Index j = 0; j < count; ++j) {
    probs[j] *= inv;
    const Real* vj = values + j * stride;
    for (Index d = 0; d < head_dim; ++d) out[d] += probs[j] * vj[d];
  }
}

namespace {

// Window-packed offsets of one (sequence, head) block, shared by all blocks.
Index window_layout(const TrapezoidMask& mask, Index steps, std::vector<Index>& base) {
  base.resize(static_cast<std::size_t>(steps));
  Index total = 0;
  for (Index i = 0; i < steps; ++i) {
    base[static_cast<std::size_t>(i)] = total;
    const Index count = mask.last_key(i, steps) - mask.first_key(i) + 1;
    check_shape(count >= 1, "attention row with no visible keys");
    total += count;
  }
  return total;
}

}  // namespace

Tensor attention_forward(const Tensor& q, const Tensor& k, const Tensor& v, Index heads,
                         const TrapezoidMask& mask, AttentionCache* cache) {
  check_shape(q.rank() == 3 && q.same_shape(k) && q.same_shape(v),
              "attention expects matching (N, S, D) query/key/value");
  const Index n_seq = q.dim(0), steps = q.dim(1), width = q.dim(2);
  check_shape(heads >= 1 && width % heads == 0, "attention: heads must divide model width");
  const Index head_dim = width / heads;
  std::vector<Index> base;
  const Index block = window_layout(mask, steps, base);
  if (cache) {
    cache->probs.assign(static_cast<std::size_t>(n_seq * heads * block), Real{0});
    cache->row_offset = base;
  }
  Tensor out(q.shape());
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < n_seq; ++n) {
    for (Index h = 0; h < heads; ++h) {
      for (Index i = 0; i < steps; ++i) {
        const Index lo = mask.first_key(i);
        const Index count = mask.last_key(i, steps) - lo + 1;
        Real* probs = cache ? cache->probs.data() + (n * heads + h) * block +
                                  base[static_cast<std::size_t>(i)]
                            : nullptr;
        attend_row(q.data() + (n * steps + i) * width + h * head_dim,
                   k.data() + (n * steps + lo) * width + h * head_dim,
                   v.data() + (n * steps + lo) * width + h * head_dim, width, count, head_dim,
                   out.data() + (n * steps + i) * width + h * head_dim, probs);
      }
    }
  }
  return out;
}

void attention_backward(const Tensor& q, const Tensor& k, const Tensor& v, Index heads,
                        const TrapezoidMask& mask, const AttentionCache& cache,
                        const Tensor& grad_out, Tensor* grad_q, Tensor* grad_k,
                        Tensor* grad_v) {
  const Index n_seq = q.dim(0), steps = q.dim(1), width = q.dim(2);
  const Index head_dim = width / heads;
  const Real scale = Real{1} / std::sqrt(static_cast<Real>(head_dim));
  const auto& base = cache.row_offset;
  Index block = 0;
  for (Index i = 0; i < steps; ++i)
    block += mask.last_key(i, steps) - mask.first_key(i) + 1;

#pragma omp parallel
  {
    std::vector<Real> dp;
#pragma omp for schedule(static)
    for (Index n = 0; n < n_seq; ++n) {
      for (Index h = 0; h < heads; ++h) {
        for (Index i = 0; i < steps; ++i) {
          const Index lo = mask.first_key(i);
          const Index count = mask.last_key(i, steps) - lo + 1;
          const Real* p =
              cache.probs.data() + (n * heads + h) * block + base[static_cast<std::size_t>(i)];
          const Real* dout = grad_out.data() + (n * steps + i) * width + h * head_dim;
          const Real* qi = q.data() + (n * steps + i) * width + h * head_dim;
          dp.resize(static_cast<std::size_t>(count));
          Real weighted = 0;
          for (Index j = 0; j < count; ++j) {
            const Index row = (n * steps + lo + j) * width + h * head_dim;
            const Real* vj = v.data() + row;
            Real dot = 0;
            for (Index d = 0; d < head_dim; ++d) dot += dout[d] * vj[d];
            dp[static_cast<std::size_t>(j)] = dot;
            weighted += p[j] * dot;
            if (grad_v) {
              Real* dv = grad_v->data() + row;
              for (Index d = 0; d < head_dim; ++d) dv[d] += p[j] * dout[d];
            }
          }
          Real* dq = grad_q ? grad_q->data() + (n * steps + i) * width + h * head_dim : nullptr;
          for (Index j = 0; j < count; ++j) {
            const Real ds = p[j] * (dp[static_cast<std::size_t>(j)] - weighted) * scale;
            const Index row = (n * steps + lo + j) * width + h * head_dim;
            if (dq) {
              const Real* kj = k.data() + row;
              for (Index d = 0; d < head_dim; ++d) dq[d] += ds * kj[d];
            }
            if (grad_k) {
              Real* dk = grad_k->data() + row;
              for (Index d = 0; d < head_dim; ++d) dk[d] += ds * qi[d];
            }
          }
        }
      }
    }
  }
}

}  // namespace kernels
}  // namespace LCT_PRECISION_NS
}  // namespace lct
