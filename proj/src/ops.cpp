// SPDX-License-Identifier: Apache-2.0

#include "lct/ops.hpp"

#include <cmath>
#include <memory>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace ops {
namespace {

void require_same(const Var& a, const Var& b, const char* op) {
  check_shape(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                          shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

const Tensor* optional_value(const Var& v) { return v ? &v.value() : nullptr; }

std::vector<Var> present(std::initializer_list<Var> vars) {
  std::vector<Var> out;
  for (const Var& v : vars)
    if (v) out.push_back(v);
  return out;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  out.add_(b.value());
  return make_op(std::move(out), {a, b}, [a, b](const Node& self) {
    if (auto* g = grad_sink(a)) g->add_(self.grad);
    if (auto* g = grad_sink(b)) g->add_(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  out.add_scaled_(b.value(), Real{-1});
  return make_op(std::move(out), {a, b}, [a, b](const Node& self) {
    if (auto* g = grad_sink(a)) g->add_(self.grad);
    if (auto* g = grad_sink(b)) g->add_scaled_(self.grad, Real{-1});
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  for (Index i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  return make_op(std::move(out), {a, b}, [a, b](const Node& self) {
    if (auto* g = grad_sink(a))
      for (Index i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i] * b.value()[i];
    if (auto* g = grad_sink(b))
      for (Index i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i] * a.value()[i];
  });
}

Var scale(const Var& a, Real factor) {
  Tensor out = a.value();
  for (Real& v : out.values()) v *= factor;
  return make_op(std::move(out), {a}, [a, factor](const Node& self) {
    if (auto* g = grad_sink(a)) g->add_scaled_(self.grad, factor);
  });
}

Var sum(const Var& a) {
  double acc = 0;
  for (Real v : a.value().values()) acc += v;
  return make_op(Tensor({1}, static_cast<Real>(acc)), {a}, [a](const Node& self) {
    if (auto* g = grad_sink(a))
      for (Real& v : g->values()) v += self.grad[0];
  });
}

Var mean(const Var& a) {
  const Index n = a.value().numel();
  check_shape(n > 0, "mean of an empty tensor");
  return scale(sum(a), Real{1} / static_cast<Real>(n));
}

Var leaky_relu(const Var& a, Real alpha) {
  Tensor out = a.value();
  for (Real& v : out.values()) v = v >= 0 ? v : alpha * v;
  return make_op(std::move(out), {a}, [a, alpha](const Node& self) {
    if (auto* g = grad_sink(a))
      for (Index i = 0; i < g->numel(); ++i)
        (*g)[i] += self.grad[i] * (a.value()[i] >= 0 ? Real{1} : alpha);
  });
}

Var sigmoid(const Var& a) {
  Tensor out = a.value();
  for (Real& v : out.values()) v = Real{1} / (Real{1} + std::exp(-v));
  return make_op(std::move(out), {a}, [a](const Node& self) {
    if (auto* g = grad_sink(a))
      for (Index i = 0; i < g->numel(); ++i) {
        const Real y = self.value[i];
        (*g)[i] += self.grad[i] * y * (Real{1} - y);
      }
  });
}

Var power(const Var& a, Real exponent) {
  Tensor out = a.value();
  for (Real& v : out.values()) v = std::pow(v, exponent);
  return make_op(std::move(out), {a}, [a, exponent](const Node& self) {
    if (auto* g = grad_sink(a))
      for (Index i = 0; i < g->numel(); ++i) {
        const Real x = a.value()[i];
        if (x > 0) (*g)[i] += self.grad[i] * exponent * self.value[i] / x;
      }
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshape(std::move(shape));
  return make_op(std::move(out), {a}, [a](const Node& self) {
    if (auto* g = grad_sink(a)) g->add_(self.grad);
  });
}

Var permute(const Var& a, std::array<int, 4> perm) {
  const Tensor& x = a.value();
  check_shape(x.rank() == 4, "permute expects a rank-4 tensor");
  const Shape& in_shape = x.shape();
  Shape out_shape(4);
  for (int i = 0; i < 4; ++i) out_shape[static_cast<std::size_t>(i)] = in_shape[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  std::array<Index, 4> in_stride{};
  in_stride[3] = 1;
  for (int i = 2; i >= 0; --i)
    in_stride[static_cast<std::size_t>(i)] = in_stride[static_cast<std::size_t>(i + 1)] * in_shape[static_cast<std::size_t>(i + 1)];
  std::array<Index, 4> step{};
  for (int i = 0; i < 4; ++i) step[static_cast<std::size_t>(i)] = in_stride[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];

  // Gather index of every output element, reused by the backward scatter.
  auto gather = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(x.numel()));
  Index o = 0;
  for (Index i0 = 0; i0 < out_shape[0]; ++i0)
    for (Index i1 = 0; i1 < out_shape[1]; ++i1)
      for (Index i2 = 0; i2 < out_shape[2]; ++i2) {
        const Index base = i0 * step[0] + i1 * step[1] + i2 * step[2];
        for (Index i3 = 0; i3 < out_shape[3]; ++i3) (*gather)[static_cast<std::size_t>(o++)] = base + i3 * step[3];
      }
  Tensor out(out_shape);
  for (Index i = 0; i < out.numel(); ++i) out[i] = x[(*gather)[static_cast<std::size_t>(i)]];
  return make_op(std::move(out), {a}, [a, gather](const Node& self) {
    if (auto* g = grad_sink(a))
      for (Index i = 0; i < self.grad.numel(); ++i) (*g)[(*gather)[static_cast<std::size_t>(i)]] += self.grad[i];
  });
}

Var concat_channels(const Var& a, const Var& b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  check_shape(x.rank() == 4 && y.rank() == 4 && x.dim(0) == y.dim(0) && x.dim(2) == y.dim(2) &&
                  x.dim(3) == y.dim(3),
              "concat_channels: incompatible shapes " + shape_str(x.shape()) + " and " +
                  shape_str(y.shape()));
  const Index batch = x.dim(0), ca = x.dim(1), cb = y.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor out({batch, ca + cb, x.dim(2), x.dim(3)});
  for (Index n = 0; n < batch; ++n) {
    std::copy_n(x.data() + n * ca * plane, ca * plane, out.data() + n * (ca + cb) * plane);
    std::copy_n(y.data() + n * cb * plane, cb * plane, out.data() + (n * (ca + cb) + ca) * plane);
  }
  return make_op(std::move(out), {a, b}, [a, b, batch, ca, cb, plane](const Node& self) {
    for (Index n = 0; n < batch; ++n) {
      if (auto* g = grad_sink(a))
        for (Index i = 0; i < ca * plane; ++i)
          (*g)[n * ca * plane + i] += self.grad[n * (ca + cb) * plane + i];
      if (auto* g = grad_sink(b))
        for (Index i = 0; i < cb * plane; ++i)
          (*g)[n * cb * plane + i] += self.grad[(n * (ca + cb) + ca) * plane + i];
    }
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  Tensor out = kernels::linear_forward(x.value(), weight.value(), optional_value(bias));
  return make_op(std::move(out), present({x, weight, bias}), [x, weight, bias](const Node& self) {
    kernels::linear_backward(x.value(), weight.value(), self.grad, grad_sink(x),
                             grad_sink(weight), bias ? grad_sink(bias) : nullptr);
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, const kernels::ConvGeometry& g) {
  Tensor out = kernels::conv2d_forward(x.value(), weight.value(), optional_value(bias), g);
  return make_op(std::move(out), present({x, weight, bias}),
                 [x, weight, bias, g](const Node& self) {
                   kernels::conv2d_backward(x.value(), weight.value(), self.grad, g,
                                            grad_sink(x), grad_sink(weight),
                                            bias ? grad_sink(bias) : nullptr);
                 });
}

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias,
                     const kernels::ConvGeometry& g) {
  Tensor out = kernels::conv_transpose2d_forward(x.value(), weight.value(), optional_value(bias), g);
  return make_op(std::move(out), present({x, weight, bias}),
                 [x, weight, bias, g](const Node& self) {
                   kernels::conv_transpose2d_backward(x.value(), weight.value(), self.grad, g,
                                                      grad_sink(x), grad_sink(weight),
                                                      bias ? grad_sink(bias) : nullptr);
                 });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias) {
  auto cache = std::make_shared<kernels::LayerNormCache>();
  const bool keep = grad_enabled();
  Tensor out = kernels::layer_norm_forward(x.value(), gain.value(), bias.value(),
                                           keep ? cache.get() : nullptr);
  return make_op(std::move(out), {x, gain, bias}, [x, gain, bias, cache](const Node& self) {
    kernels::layer_norm_backward(gain.value(), *cache, self.grad, grad_sink(x), grad_sink(gain),
                                 grad_sink(bias));
  });
}

Var gru(const Var& x, const Var& w_ih, const Var& w_hh, const Var& bias) {
  check_shape(x.value().rank() == 3, "gru expects (N, S, F) input");
  const Index hidden = w_hh.dim(0) * w_hh.dim(2);
  Tensor h0({x.dim(0), hidden});
  auto cache = std::make_shared<kernels::GruCache>();
  const bool keep = grad_enabled();
  Tensor out = kernels::gru_forward(x.value(), h0, w_ih.value(), w_hh.value(), bias.value(),
                                    keep ? cache.get() : nullptr);
  return make_op(std::move(out), {x, w_ih, w_hh, bias},
                 [x, w_ih, w_hh, bias, cache, h0](const Node& self) {
                   kernels::gru_backward(x.value(), h0, w_ih.value(), w_hh.value(), self.value,
                                         *cache, self.grad, grad_sink(x), nullptr,
                                         grad_sink(w_ih), grad_sink(w_hh), grad_sink(bias));
                 });
}

Var attention(const Var& q, const Var& k, const Var& v, Index heads,
              const kernels::TrapezoidMask& mask) {
  auto cache = std::make_shared<kernels::AttentionCache>();
  const bool keep = grad_enabled();
  Tensor out = kernels::attention_forward(q.value(), k.value(), v.value(), heads, mask,
                                          keep ? cache.get() : nullptr);
  return make_op(std::move(out), {q, k, v}, [q, k, v, heads, mask, cache](const Node& self) {
    kernels::attention_backward(q.value(), k.value(), v.value(), heads, mask, *cache, self.grad,
                                grad_sink(q), grad_sink(k), grad_sink(v));
  });
}

Var weight_norm(const Var& direction, const Var& magnitude) {
  const Tensor& v = direction.value();
  const Index rows = v.dim(0);
  check_shape(magnitude.value().numel() == rows, "weight_norm: one magnitude per output slice");
  const Index width = v.numel() / rows;
  auto norms = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(rows));
  Tensor out(v.shape());
  for (Index r = 0; r < rows; ++r) {
    double ss = 0;
    for (Index j = 0; j < width; ++j) ss += static_cast<double>(v[r * width + j]) * v[r * width + j];
    const Real n = static_cast<Real>(std::sqrt(ss) + 1e-12);
    (*norms)[static_cast<std::size_t>(r)] = n;
    const Real s = magnitude.value()[r] / n;
    for (Index j = 0; j < width; ++j) out[r * width + j] = v[r * width + j] * s;
  }
  return make_op(std::move(out), {direction, magnitude},
                 [direction, magnitude, norms, rows, width](const Node& self) {
                   const Tensor& v = direction.value();
                   auto* gv = grad_sink(direction);
                   auto* gg = grad_sink(magnitude);
                   for (Index r = 0; r < rows; ++r) {
                     const Real n = (*norms)[static_cast<std::size_t>(r)];
                     Real proj = 0;
                     for (Index j = 0; j < width; ++j) proj += self.grad[r * width + j] * v[r * width + j];
                     proj /= n;
                     if (gg) (*gg)[r] += proj;
                     if (gv) {
                       const Real g = magnitude.value()[r];
                       for (Index j = 0; j < width; ++j)
                         (*gv)[r * width + j] +=
                             g / n * (self.grad[r * width + j] - proj * v[r * width + j] / n);
                     }
                   }
                 });
}

Var avg_pool2_last(const Var& x) {
  const Tensor& in = x.value();
  const Index width = in.shape().back();
  check_shape(width >= 2, "avg_pool2_last needs at least two samples");
  const Index rows = in.numel() / width, half = width / 2;
  Shape shape = in.shape();
  shape.back() = half;
  Tensor out(shape);
  for (Index r = 0; r < rows; ++r)
    for (Index j = 0; j < half; ++j)
      out[r * half + j] = Real{0.5} * (in[r * width + 2 * j] + in[r * width + 2 * j + 1]);
  return make_op(std::move(out), {x}, [x, rows, width, half](const Node& self) {
    if (auto* g = grad_sink(x))
      for (Index r = 0; r < rows; ++r)
        for (Index j = 0; j < half; ++j) {
          const Real d = Real{0.5} * self.grad[r * half + j];
          (*g)[r * width + 2 * j] += d;
          (*g)[r * width + 2 * j + 1] += d;
        }
  });
}

Var reflect_pad_right(const Var& x, Index amount) {
  const Tensor& in = x.value();
  check_shape(in.rank() == 2, "reflect_pad_right expects (B, N)");
  const Index batch = in.dim(0), length = in.dim(1);
  check_shape(amount >= 0 && amount < length, "reflect padding must be shorter than the signal");
  auto source = [length](Index i) { return i < length ? i : 2 * (length - 1) - i; };
  Tensor out({batch, length + amount});
  for (Index b = 0; b < batch; ++b)
    for (Index i = 0; i < length + amount; ++i) out[b * (length + amount) + i] = in[b * length + source(i)];
  return make_op(std::move(out), {x}, [x, batch, length, amount, source](const Node& self) {
    if (auto* g = grad_sink(x))
      for (Index b = 0; b < batch; ++b)
        for (Index i = 0; i < length + amount; ++i)
          (*g)[b * length + source(i)] += self.grad[b * (length + amount) + i];
  });
}

Var crop_last(const Var& x, Index length) {
  const Tensor& in = x.value();
  check_shape(in.rank() == 2 && length >= 0 && length <= in.dim(1),
              "crop_last: cannot keep " + std::to_string(length) + " samples of " +
                  shape_str(in.shape()));
  const Index batch = in.dim(0), width = in.dim(1);
  Tensor out({batch, length});
  for (Index b = 0; b < batch; ++b) std::copy_n(in.data() + b * width, length, out.data() + b * length);
  return make_op(std::move(out), {x}, [x, batch, width, length](const Node& self) {
    if (auto* g = grad_sink(x))
      for (Index b = 0; b < batch; ++b)
        for (Index i = 0; i < length; ++i) (*g)[b * width + i] += self.grad[b * length + i];
  });
}

Var stft(const Var& waves, const dsp::StftConfig& cfg) {
  Tensor out = dsp::stft_batch(waves.value(), cfg);
  const Index length = waves.dim(1);
  return make_op(std::move(out), {waves}, [waves, cfg, length](const Node& self) {
    if (auto* g = grad_sink(waves)) g->add_(dsp::stft_batch_adjoint(self.grad, cfg, length));
  });
}

Var istft(const Var& spec, const dsp::StftConfig& cfg, Index length) {
  Tensor out = dsp::istft_batch(spec.value(), cfg, length);
  const Index frames = spec.dim(1);
  return make_op(std::move(out), {spec}, [spec, cfg, frames](const Node& self) {
    if (auto* g = grad_sink(spec)) g->add_(dsp::istft_batch_adjoint(self.grad, cfg, frames));
  });
}

Var apply_mask(const Var& mask, const Tensor& spectrum) {
  const Tensor& m = mask.value();
  check_shape(spectrum.rank() == 4 && spectrum.dim(3) == 2 && m.numel() * 2 == spectrum.numel(),
              "apply_mask: mask " + shape_str(m.shape()) + " does not match spectrum " +
                  shape_str(spectrum.shape()));
  Tensor out(spectrum.shape());
  for (Index i = 0; i < m.numel(); ++i) {
    out[2 * i] = m[i] * spectrum[2 * i];
    out[2 * i + 1] = m[i] * spectrum[2 * i + 1];
  }
  auto spec = std::make_shared<Tensor>(spectrum);
  return make_op(std::move(out), {mask}, [mask, spec](const Node& self) {
    if (auto* g = grad_sink(mask))
      for (Index i = 0; i < g->numel(); ++i)
        (*g)[i] += self.grad[2 * i] * (*spec)[2 * i] + self.grad[2 * i + 1] * (*spec)[2 * i + 1];
  });
}

Var mse_to(const Var& a, Real target) {
  const Tensor& x = a.value();
  const Index n = x.numel();
  check_shape(n > 0, "mse_to of an empty tensor");
  double acc = 0;
  for (Real v : x.values()) acc += (static_cast<double>(v) - target) * (static_cast<double>(v) - target);
  return make_op(Tensor({1}, static_cast<Real>(acc / static_cast<double>(n))), {a},
                 [a, target, n](const Node& self) {
                   if (auto* g = grad_sink(a)) {
                     const Real k = self.grad[0] * Real{2} / static_cast<Real>(n);
                     for (Index i = 0; i < n; ++i) (*g)[i] += k * (a.value()[i] - target);
                   }
                 });
}

Var mean_abs_diff(const Var& a, const Var& b) {
  require_same(a, b, "mean_abs_diff");
  const Index n = a.value().numel();
  check_shape(n > 0, "mean_abs_diff of empty tensors");
  double acc = 0;
  for (Index i = 0; i < n; ++i) acc += std::abs(static_cast<double>(a.value()[i]) - b.value()[i]);
  return make_op(Tensor({1}, static_cast<Real>(acc / static_cast<double>(n))), {a, b},
                 [a, b, n](const Node& self) {
                   const Real k = self.grad[0] / static_cast<Real>(n);
                   auto* ga = grad_sink(a);
                   auto* gb = grad_sink(b);
                   for (Index i = 0; i < n; ++i) {
                     const Real d = a.value()[i] - b.value()[i];
                     const Real s = d > 0 ? k : (d < 0 ? -k : Real{0});
                     if (ga) (*ga)[i] += s;
                     if (gb) (*gb)[i] -= s;
                   }
                 });
}

Var compressed_spectral_loss(const Var& estimate, const Tensor& reference, Real compression,
                             Real phase_blend) {
  const Tensor& est = estimate.value();
  check_shape(est.same_shape(reference) && est.shape().back() == 2,
              "compressed_spectral_loss: spectra differ " + shape_str(est.shape()) + " vs " +
                  shape_str(reference.shape()));
  const Index cells = est.numel() / 2;
  const Real c = compression, beta = phase_blend;
  const Real floor = static_cast<Real>(kPowerFloor);
  double mag_sum = 0, cplx_sum = 0;
  for (Index i = 0; i < cells; ++i) {
    const Real a = est[2 * i], b = est[2 * i + 1];
    const Real ar = reference[2 * i], br = reference[2 * i + 1];
    const Real p = a * a + b * b + floor, pr = ar * ar + br * br + floor;
    const Real mag = std::pow(p, c / 2), mag_ref = std::pow(pr, c / 2);
    const Real q = std::pow(p, (c - 1) / 2), q_ref = std::pow(pr, (c - 1) / 2);
    const Real er = a * q - ar * q_ref, ei = b * q - br * q_ref;
    mag_sum += static_cast<double>(mag - mag_ref) * (mag - mag_ref);
    cplx_sum += static_cast<double>(er) * er + static_cast<double>(ei) * ei;
  }
  const double loss =
      ((1.0 - beta) * mag_sum + beta * cplx_sum) / static_cast<double>(cells);
  auto ref = std::make_shared<Tensor>(reference);
  return make_op(
      Tensor({1}, static_cast<Real>(loss)), {estimate},
      [estimate, ref, c, beta, floor, cells](const Node& self) {
        auto* g = grad_sink(estimate);
        if (!g) return;
        const Tensor& est = estimate.value();
        const Real k = self.grad[0] / static_cast<Real>(cells);
        for (Index i = 0; i < cells; ++i) {
          const Real a = est[2 * i], b = est[2 * i + 1];
          const Real ar = (*ref)[2 * i], br = (*ref)[2 * i + 1];
          const Real p = a * a + b * b + floor, pr = ar * ar + br * br + floor;
          const Real mag = std::pow(p, c / 2), mag_ref = std::pow(pr, c / 2);
          const Real dmag = c * std::pow(p, c / 2 - 1);  // d mag / d a == dmag * a
          const Real q = std::pow(p, (c - 1) / 2), q_ref = std::pow(pr, (c - 1) / 2);
          const Real dq = (c - 1) * std::pow(p, (c - 3) / 2);  // d q / d a == dq * a
          const Real er = a * q - ar * q_ref, ei = b * q - br * q_ref;
          const Real em = mag - mag_ref;
          const Real ga = (1 - beta) * 2 * em * dmag * a +
                          beta * 2 * (er * (q + a * a * dq) + ei * (b * a * dq));
          const Real gb = (1 - beta) * 2 * em * dmag * b +
                          beta * 2 * (er * (a * b * dq) + ei * (q + b * b * dq));
          (*g)[2 * i] += k * ga;
          (*g)[2 * i + 1] += k * gb;
        }
      });
}

}  // namespace ops
}  // namespace LCT_PRECISION_NS
}  // namespace lct
