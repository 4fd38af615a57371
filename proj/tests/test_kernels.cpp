// SPDX-License-Identifier: Apache-2.0
//
// Parallel kernels against the serial reference implementations.

#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "lct/kernels/kernels.hpp"
#include "lct/kernels/reference.hpp"

using namespace lct;
using kernels::ConvGeometry;
using kernels::TrapezoidMask;
using testing::random_tensor;

namespace {

double max_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.same_shape(b));
  double d = 0;
  for (Index i = 0; i < a.numel(); ++i) d = std::max(d, std::abs(static_cast<double>(a[i]) - b[i]));
  return d;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("conv2d matches reference") {
    std::mt19937_64 rng(1);
    const ConvGeometry encoder{2, 3, 1, 2, 1, 0, 1, 1, 1};
    const ConvGeometry grouped{3, 3, 1, 1, 2, 0, 1, 1, 2};
    const ConvGeometry strided{5, 1, 3, 1, 2, 2, 0, 0, 1};
    for (const auto& [g, cin, cout] : {std::tuple{encoder, 4, 8}, std::tuple{grouped, 4, 6}, std::tuple{strided, 3, 5}}) {
      const Tensor x = random_tensor({2, cin, 9, 17}, rng);
      const Tensor w = random_tensor({cout, cin / g.groups, g.kernel_h, g.kernel_w}, rng);
      const Tensor b = random_tensor({cout}, rng);
      CHECK(max_diff(kernels::conv2d_forward(x, w, &b, g), reference::conv2d(x, w, &b, g)) < 1e-5);
      CHECK(max_diff(kernels::conv2d_forward(x, w, nullptr, g), reference::conv2d(x, w, nullptr, g)) < 1e-5);
    }
  }

  TEST_CASE("transposed conv matches reference") {
    std::mt19937_64 rng(2);
    const ConvGeometry g{2, 3, 1, 2, 0, 1, 1, 1, 1};
    const Tensor x = random_tensor({2, 6, 5, 33}, rng);
    const Tensor w = random_tensor({6, 4, 2, 3}, rng);
    const Tensor b = random_tensor({4}, rng);
    const Tensor y = kernels::conv_transpose2d_forward(x, w, &b, g);
    CHECK(y.dim(2) == 5);
    CHECK(y.dim(3) == 65);
    CHECK(max_diff(y, reference::conv_transpose2d(x, w, &b, g)) < 1e-5);
  }

  TEST_CASE("linear matches reference") {
    std::mt19937_64 rng(3);
    const Tensor x = random_tensor({7, 64}, rng), w = random_tensor({32, 64}, rng), b = random_tensor({32}, rng);
    CHECK(max_diff(kernels::linear_forward(x, w, &b), reference::linear(x, w, &b)) < 1e-5);
  }

  TEST_CASE("grouped GRU matches reference") {
    std::mt19937_64 rng(4);
    const Tensor x = random_tensor({5, 7, 16}, rng), h0 = random_tensor({5, 16}, rng);
    const Tensor wih = random_tensor({4, 12, 4}, rng), whh = random_tensor({4, 12, 4}, rng), b = random_tensor({4, 12}, rng);
    CHECK(max_diff(kernels::gru_forward(x, h0, wih, whh, b, nullptr), reference::gru(x, h0, wih, whh, b)) < 1e-5);
  }

  TEST_CASE("layer norm matches reference") {
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor({9, 64}, rng), g = random_tensor({64}, rng), b = random_tensor({64}, rng);
    CHECK(max_diff(kernels::layer_norm_forward(x, g, b, nullptr), reference::layer_norm(x, g, b)) < 1e-5);
  }

  TEST_CASE("banded attention matches dense masked reference") {
    std::mt19937_64 rng(6);
    const Tensor q = random_tensor({3, 20, 16}, rng), k = random_tensor({3, 20, 16}, rng), v = random_tensor({3, 20, 16}, rng);
    for (const auto mask : {TrapezoidMask::causal(5, 0), TrapezoidMask::causal(5, 1), TrapezoidMask::unbounded(),
                            TrapezoidMask::causal(62, 0)}) {
      CHECK(max_diff(kernels::attention_forward(q, k, v, 4, mask, nullptr), reference::attention(q, k, v, 4, mask)) <
            1e-5);
    }
  }

  TEST_CASE("trapezoid window enumeration") {
    const auto mask = TrapezoidMask::causal(3, 0);
    CHECK(mask.first_key(5) == 3);
    CHECK(mask.last_key(5, 10) == 5);
    const auto ahead = TrapezoidMask::causal(62, 1);
    CHECK(ahead.first_key(100) == 39);
    CHECK(ahead.last_key(100, 200) == 101);
    CHECK(ahead.last_key(199, 200) == 199);
    CHECK(ahead.first_key(0) == 0);
    for (Index t = 0; t < 200; ++t) CHECK(ahead.last_key(t, 200) - ahead.first_key(t) + 1 <= 63);
  }

  TEST_CASE("conv output sizes follow the padded-stride formula") {
    Index f = 257;
    for (Index expected : {129, 65, 33}) {
      f = kernels::conv_out_size(f, 3, 2, 1, 1);
      CHECK(f == expected);
    }
    for (Index expected : {65, 129, 257}) {
      f = kernels::conv_transpose_out_size(f, 3, 2, 1, 1);
      CHECK(f == expected);
    }
  }
}
