// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "lct/nn/layers.hpp"

using namespace lct;
using kernels::ConvGeometry;
using kernels::TrapezoidMask;
using testing::random_tensor;

namespace {

// Textbook GRU over one sequence in double: gate rows ordered r, z, n.
std::vector<double> standard_gru(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& b, Index hidden) {
  const Index steps = x.dim(1), f = x.dim(2);
  std::vector<double> h(hidden, 0.0), out;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (Index s = 0; s < steps; ++s) {
    std::vector<double> next(hidden);
    for (Index j = 0; j < hidden; ++j) {
      double a[3], r[3];
      for (int g = 0; g < 3; ++g) {
        const Index row = g * hidden + j;
        a[g] = b[row];
        for (Index i = 0; i < f; ++i) a[g] += double(w_ih[row * f + i]) * x[s * f + i];
        r[g] = 0;
        for (Index i = 0; i < hidden; ++i) r[g] += double(w_hh[row * hidden + i]) * h[i];
      }
      const double rg = sig(a[0] + r[0]), zg = sig(a[1] + r[1]);
      const double n = std::tanh(a[2] + rg * r[2]);
      next[j] = (1 - zg) * n + zg * h[j];
    }
    h = next;
    out.insert(out.end(), h.begin(), h.end());
  }
  return out;
}

Tensor spike(Shape shape, Index frame) {
  Tensor t(shape);
  for (Index b = 0; b < shape[0]; ++b)
    for (Index c = 0; c < shape[1]; ++c)
      for (Index f = 0; f < shape[3]; ++f) t.at(b, c, frame, f) = 1.0f;
  return t;
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("grouped GRU parameter counts") {
    CHECK(nn::GroupedGruSpec{64, 64, 4}.param_count() == 6336);
    // groups * 3 * (fg*hg + hg^2 + hg) with one bias per gate row
    CHECK(nn::GroupedGruSpec{64, 64, 1}.param_count() == 3 * (64 * 64 + 64 * 64 + 64));
    CHECK_THROWS_AS(nn::GroupedGruSpec({64, 64, 5}).validate(), ConfigError);
    std::mt19937_64 rng(1);
    nn::ParamStore store;
    nn::GroupedGru gru(store, "gru", {64, 64, 4}, rng);
    CHECK(store.total_elements() == 6336);
  }

  TEST_CASE("zero-parameter GRU halves its state each step") {
    const Tensor x({1, 4, 8}, 0.7f), h0({1, 8}, 1.0f);
    const Tensor w_ih({2, 12, 4}), w_hh({2, 12, 4}), b({2, 12});
    const Tensor y = kernels::gru_forward(x, h0, w_ih, w_hh, b, nullptr);
    for (Index s = 0; s < 4; ++s)
      for (Index j = 0; j < 8; ++j) CHECK(y[s * 8 + j] == doctest::Approx(std::pow(0.5, s + 1)));
  }

  TEST_CASE("one group is a standard GRU") {
    std::mt19937_64 rng(2);
    const Tensor x = random_tensor({1, 5, 6}, rng);
    const Tensor w_ih = random_tensor({1, 24, 6}, rng), w_hh = random_tensor({1, 24, 8}, rng), b = random_tensor({1, 24}, rng);
    const Tensor y = ops::gru(constant(x), constant(w_ih), constant(w_hh), constant(b)).value();
    const auto ref = standard_gru(x, w_ih, w_hh, b, 8);
    for (Index i = 0; i < y.numel(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-5));
  }

  TEST_CASE("groups are isolated") {
    std::mt19937_64 rng(3);
    nn::ParamStore store;
    nn::GroupedGru gru(store, "gru", {16, 16, 4}, rng);
    Tensor x = random_tensor({2, 6, 16}, rng);
    const Tensor before = gru(constant(x)).value();
    for (Index s = 0; s < 6; ++s)
      for (Index i = 0; i < 4; ++i) x[(1 * 6 + s) * 16 + i] += 0.5f;  // group 0 of sequence 1
    const Tensor after = gru(constant(x)).value();
    for (Index n = 0; n < 2; ++n)
      for (Index s = 0; s < 6; ++s)
        for (Index j = 0; j < 16; ++j) {
          const Index i = (n * 6 + s) * 16 + j;
          if (n == 1 && j < 4) continue;
          CHECK(after[i] == before[i]);
        }
  }

  TEST_CASE("identity 1x1 conv") {
    std::mt19937_64 rng(4);
    nn::ParamStore store;
    nn::Conv2d conv(store, "c", 3, 3, ConvGeometry{}, rng);
    conv.weight.mutable_value().fill(0);
    conv.bias.mutable_value().fill(0);
    for (Index c = 0; c < 3; ++c) conv.weight.mutable_value()[c * 3 + c] = 1;
    const Tensor x = random_tensor({2, 3, 4, 5}, rng);
    const Tensor y = conv(constant(x)).value();
    for (Index i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
  }

  TEST_CASE("encoder and decoder convs never respond before a spike") {
    std::mt19937_64 rng(5);
    nn::ParamStore store;
    const ConvGeometry down{2, 3, 1, 2, 1, 0, 1, 1, 1};
    const ConvGeometry up{2, 3, 1, 2, 0, 1, 1, 1, 1};
    nn::Conv2d enc(store, "e", 2, 4, down, rng);
    nn::ConvTranspose2d dec(store, "d", 4, 2, up, rng);
    enc.bias.mutable_value().fill(0);
    dec.bias.mutable_value().fill(0);
    const Index t = 5;
    const Tensor e = enc(constant(spike({1, 2, 10, 17}, t))).value();
    const Tensor d = dec(constant(spike({1, 4, 10, 9}, t))).value();
    CHECK(e.dim(3) == 9);
    CHECK(d.dim(3) == 17);
    for (const Tensor* y : {&e, &d})
      for (Index c = 0; c < y->dim(1); ++c)
        for (Index f = 0; f < y->dim(3); ++f) {
          for (Index frame = 0; frame < t; ++frame) CHECK(y->at(0, c, frame, f) == 0.0f);
        }
    CHECK(e.max_abs() > 0);
    CHECK(d.max_abs() > 0);
    const Tensor zero = dec(constant(Tensor({1, 4, 3, 9}))).value();
    CHECK(zero.max_abs() == 0.0f);
  }

  TEST_CASE("conv channel mismatch is an error") {
    std::mt19937_64 rng(6);
    nn::ParamStore store;
    nn::Conv2d conv(store, "c", 3, 4, ConvGeometry{}, rng);
    CHECK_THROWS_AS(conv(constant(Tensor({1, 2, 4, 4}))), ShapeError);
  }

  TEST_CASE("layer norm") {
    nn::ParamStore store;
    nn::LayerNorm ln(store, "ln", 2);
    const Tensor y = ln(constant(Tensor({1, 2}, std::vector<Real>{1, 3}))).value();
    CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-4));
    nn::LayerNorm wide(store, "wide", 5);
    const Tensor flat = wide(constant(Tensor({1, 5}, 3.0f))).value();
    CHECK(flat.max_abs() == 0.0f);
    std::mt19937_64 rng(7);
    const Tensor x = random_tensor({3, 5}, rng);
    Tensor scaled = x;
    for (Index i = 0; i < x.numel(); ++i) scaled[i] *= 7.5f;
    const Tensor a = wide(constant(x)).value(), b = wide(constant(scaled)).value();
    for (Index i = 0; i < a.numel(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-4));
  }

  TEST_CASE("attention over one position is output(value(x))") {
    std::mt19937_64 rng(8);
    nn::ParamStore store;
    nn::MultiHeadAttention mha(store, "mha", 8, 4, rng);
    const Var x = constant(random_tensor({2, 1, 8}, rng));
    const Tensor y = mha(x, TrapezoidMask::unbounded()).value();
    const Tensor ref = mha.output(mha.value(x)).value();
    for (Index i = 0; i < y.numel(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-5));
  }

  TEST_CASE("identical positions make softmax weights irrelevant") {
    std::mt19937_64 rng(9);
    nn::ParamStore store;
    nn::MultiHeadAttention mha(store, "mha", 8, 4, rng);
    const Tensor row = random_tensor({1, 1, 8}, rng);
    Tensor seq({1, 6, 8});
    for (Index s = 0; s < 6; ++s)
      for (Index j = 0; j < 8; ++j) seq[s * 8 + j] = row[j];
    const Tensor y = mha(constant(seq), TrapezoidMask::causal(3, 0)).value();
    const Tensor ref = mha.output(mha.value(constant(row))).value();
    for (Index s = 0; s < 6; ++s)
      for (Index j = 0; j < 8; ++j) CHECK(y[s * 8 + j] == doctest::Approx(ref[j]).epsilon(1e-5));
  }

  TEST_CASE("attention causality and bounded context") {
    std::mt19937_64 rng(10);
    nn::ParamStore store;
    nn::MultiHeadAttention mha(store, "mha", 8, 4, rng);
    const Index steps = 30, t = 20, context = 6;
    const Tensor x = random_tensor({1, steps, 8}, rng);
    const auto mask = TrapezoidMask::causal(context, 0);
    const Tensor base = mha(constant(x), mask).value();

    Tensor future = x;
    for (Index j = 0; j < 8; ++j) future[(t + 1) * 8 + j] += 1.0f;
    const Tensor f = mha(constant(future), mask).value();
    for (Index i = 0; i < (t + 1) * 8; ++i) CHECK(f[i] == base[i]);

    Tensor past = x;
    for (Index s = 0; s < t - context + 1; ++s)
      for (Index j = 0; j < 8; ++j) past[s * 8 + j] -= 2.0f;
    const Tensor p = mha(constant(past), mask).value();
    for (Index j = 0; j < 8; ++j) CHECK(p[t * 8 + j] == base[t * 8 + j]);
  }

  TEST_CASE("same seed, same parameters") {
    auto build = [](std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      nn::ParamStore store;
      nn::GroupedGru gru(store, "g", {16, 16, 4}, rng);
      nn::MultiHeadAttention mha(store, "m", 16, 4, rng);
      return store.checksum();
    };
    CHECK(build(3) == build(3));
    CHECK(build(3) != build(4));
  }
}
