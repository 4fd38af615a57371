// SPDX-License-Identifier: Apache-2.0

#include "lct/kernels/reference.hpp"

#include <cmath>
#include <vector>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace reference {

using kernels::ConvGeometry;

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias,
              const ConvGeometry& g) {
  const Index batch = input.dim(0), cin = input.dim(1), height = input.dim(2),
              width = input.dim(3);
  const Index cout = weight.dim(0), cin_g = weight.dim(1);
  check_shape(cin_g * g.groups == cin, "reference conv2d channel mismatch");
  const Index cout_g = cout / g.groups;
  const Index out_h = kernels::conv_out_size(height, g.kernel_h, g.stride_h, g.pad_top, g.pad_bottom);
  const Index out_w = kernels::conv_out_size(width, g.kernel_w, g.stride_w, g.pad_left, g.pad_right);
  Tensor out({batch, cout, out_h, out_w});
  for (Index b = 0; b < batch; ++b)
    for (Index co = 0; co < cout; ++co) {
      const Index grp = co / cout_g;
      for (Index oh = 0; oh < out_h; ++oh)
        for (Index ow = 0; ow < out_w; ++ow) {
          Real acc = bias ? (*bias)[co] : Real{0};
          for (Index ci = 0; ci < cin_g; ++ci)
            for (Index kh = 0; kh < g.kernel_h; ++kh)
              for (Index kw = 0; kw < g.kernel_w; ++kw) {
                const Index ih = oh * g.stride_h - g.pad_top + kh;
                const Index iw = ow * g.stride_w - g.pad_left + kw;
                if (ih < 0 || ih >= height || iw < 0 || iw >= width) continue;
                acc += weight.at(co, ci, kh, kw) * input.at(b, grp * cin_g + ci, ih, iw);
              }
          out.at(b, co, oh, ow) = acc;
        }
    }
  return out;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor* bias,
                        const ConvGeometry& g) {
  const Index batch = input.dim(0), cin = input.dim(1), height = input.dim(2),
              width = input.dim(3);
  const Index cout = weight.dim(1);
  const Index full_h = (height - 1) * g.stride_h + g.kernel_h;
  const Index full_w = (width - 1) * g.stride_w + g.kernel_w;
  const Index out_h = full_h - g.pad_top - g.pad_bottom;
  const Index out_w = full_w - g.pad_left - g.pad_right;
  Tensor out({batch, cout, out_h, out_w});
  for (Index b = 0; b < batch; ++b)
    for (Index ci = 0; ci < cin; ++ci)
      for (Index ih = 0; ih < height; ++ih)
        for (Index iw = 0; iw < width; ++iw) {
          const Real x = input.at(b, ci, ih, iw);
          for (Index co = 0; co < cout; ++co)
            for (Index kh = 0; kh < g.kernel_h; ++kh)
              for (Index kw = 0; kw < g.kernel_w; ++kw) {
                const Index oh = ih * g.stride_h + kh - g.pad_top;
                const Index ow = iw * g.stride_w + kw - g.pad_left;
                if (oh < 0 || oh >= out_h || ow < 0 || ow >= out_w) continue;
                out.at(b, co, oh, ow) += x * weight.at(ci, co, kh, kw);
              }
        }
  if (bias)
    for (Index b = 0; b < batch; ++b)
      for (Index co = 0; co < cout; ++co)
        for (Index oh = 0; oh < out_h; ++oh)
          for (Index ow = 0; ow < out_w; ++ow) out.at(b, co, oh, ow) += (*bias)[co];
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor* bias) {
  const Index in = weight.dim(1), out_features = weight.dim(0);
  const Index rows = x.numel() / in;
  Shape shape = x.shape();
  shape.back() = out_features;
  Tensor out(shape);
  for (Index r = 0; r < rows; ++r)
    for (Index o = 0; o < out_features; ++o) {
      Real acc = bias ? (*bias)[o] : Real{0};
      for (Index i = 0; i < in; ++i) acc += x[r * in + i] * weight[o * in + i];
      out[r * out_features + o] = acc;
    }
  return out;
}

Tensor gru(const Tensor& x, const Tensor& h0, const Tensor& w_ih, const Tensor& w_hh,
           const Tensor& bias) {
  const Index n_seq = x.dim(0), steps = x.dim(1), features = x.dim(2);
  const Index hidden = h0.dim(1), groups = w_ih.dim(0);
  const Index fg = features / groups, hg = hidden / groups;
  auto sig = [](Real v) { return Real{1} / (Real{1} + std::exp(-v)); };
  Tensor y({n_seq, steps, hidden});
  std::vector<Real> h(static_cast<std::size_t>(hidden)), next(h.size());
  for (Index n = 0; n < n_seq; ++n) {
    for (Index j = 0; j < hidden; ++j) h[static_cast<std::size_t>(j)] = h0[n * hidden + j];
    for (Index s = 0; s < steps; ++s) {
      const Real* xs = x.data() + (n * steps + s) * features;
      for (Index grp = 0; grp < groups; ++grp) {
        for (Index j = 0; j < hg; ++j) {
          Real pre[3];
          Real rec[3];
          for (int gate = 0; gate < 3; ++gate) {
            const Index row = grp * 3 * hg + gate * hg + j;
            pre[gate] = bias[row];
            for (Index i = 0; i < fg; ++i) pre[gate] += w_ih[row * fg + i] * xs[grp * fg + i];
            rec[gate] = 0;
            for (Index i = 0; i < hg; ++i)
              rec[gate] += w_hh[row * hg + i] * h[static_cast<std::size_t>(grp * hg + i)];
          }
          const Real r = sig(pre[0] + rec[0]);
          const Real z = sig(pre[1] + rec[1]);
          const Real c = std::tanh(pre[2] + r * rec[2]);
          next[static_cast<std::size_t>(grp * hg + j)] =
              (Real{1} - z) * c + z * h[static_cast<std::size_t>(grp * hg + j)];
        }
      }
      h = next;
      for (Index j = 0; j < hidden; ++j)
        y[(n * steps + s) * hidden + j] = h[static_cast<std::size_t>(j)];
    }
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const Index width = x.shape().back(), rows = x.numel() / width;
  Tensor out(x.shape());
  for (Index r = 0; r < rows; ++r) {
    double mean = 0, var = 0;
    for (Index j = 0; j < width; ++j) mean += x[r * width + j];
    mean /= static_cast<double>(width);
    for (Index j = 0; j < width; ++j) var += (x[r * width + j] - mean) * (x[r * width + j] - mean);
    var /= static_cast<double>(width);
    const double inv = 1.0 / std::sqrt(var + kernels::kLayerNormEps);
    for (Index j = 0; j < width; ++j)
      out[r * width + j] = static_cast<Real>((x[r * width + j] - mean) * inv) * gain[j] + bias[j];
  }
  return out;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, Index heads,
                 const kernels::TrapezoidMask& mask) {
  const Index n_seq = q.dim(0), steps = q.dim(1), width = q.dim(2);
  const Index head_dim = width / heads;
  const Real scale = Real{1} / std::sqrt(static_cast<Real>(head_dim));
  Tensor out(q.shape());
  std::vector<Real> logits(static_cast<std::size_t>(steps));
  for (Index n = 0; n < n_seq; ++n)
    for (Index h = 0; h < heads; ++h)
      for (Index i = 0; i < steps; ++i) {
        Real max_logit = static_cast<Real>(kMaskedLogit);
        for (Index j = 0; j < steps; ++j) {
          Real dot = 0;
          for (Index d = 0; d < head_dim; ++d)
            dot += q[(n * steps + i) * width + h * head_dim + d] *
                   k[(n * steps + j) * width + h * head_dim + d];
          Real logit = dot * scale;
          if (!mask.allows(i, j, steps)) logit += static_cast<Real>(kMaskedLogit);
          logits[static_cast<std::size_t>(j)] = logit;
          max_logit = std::max(max_logit, logit);
        }
        Real total = 0;
        for (Real& l : logits) {
          l = std::exp(l - max_logit);
          total += l;
        }
        for (Index d = 0; d < head_dim; ++d) {
          Real acc = 0;
          for (Index j = 0; j < steps; ++j)
            acc += logits[static_cast<std::size_t>(j)] / total *
                   v[(n * steps + j) * width + h * head_dim + d];
          out[(n * steps + i) * width + h * head_dim + d] = acc;
        }
      }
  return out;
}

}  // namespace reference
}  // namespace LCT_PRECISION_NS
}  // namespace lct
