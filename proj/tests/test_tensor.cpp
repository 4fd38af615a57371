// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "lct/ops.hpp"

using namespace lct;

TEST_SUITE("tensor") {
  TEST_CASE("shape, fill and reshape") {
    Tensor t({2, 3}, 1.5f);
    CHECK(t.numel() == 6);
    CHECK(t.dim(1) == 3);
    CHECK(t.max_abs() == 1.5f);
    const Tensor r = t.reshape({3, 2});
    CHECK(r.dim(0) == 3);
    CHECK_THROWS_AS(t.reshape({4, 2}), ShapeError);
    CHECK_THROWS_AS(t.dim(2), ShapeError);
  }

  TEST_CASE("rank-4 indexing is row major") {
    Tensor t({2, 3, 4, 5});
    t.at(1, 2, 3, 4) = 7;
    CHECK(t[t.numel() - 1] == 7);
    t.at(0, 0, 1, 0) = 2;
    CHECK(t[5] == 2);
  }

  TEST_CASE("finite check") {
    Tensor t({3});
    CHECK(t.all_finite());
    t[1] = std::numeric_limits<Real>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
  }

  TEST_CASE("gradients accumulate over shared inputs") {
    // y = x*x + x  ->  dy/dx = 2x + 1
    Var x = parameter(Tensor({1}, 3.0f));
    backward(ops::add(ops::mul(x, x), x));
    CHECK(x.grad()[0] == doctest::Approx(7.0));
  }

  TEST_CASE("no-grad guard records no graph") {
    Var x = parameter(Tensor({2}, 1.0f));
    Var y;
    {
      NoGradGuard guard;
      CHECK_FALSE(grad_enabled());
      y = ops::scale(x, 2.0f);
    }
    CHECK(grad_enabled());
    CHECK_FALSE(y.requires_grad());
    backward(ops::sum(y));
    CHECK_FALSE(x.has_grad());
  }

  TEST_CASE("detach blocks the gradient") {
    Var x = parameter(Tensor({1}, 2.0f));
    backward(ops::add(ops::mul(x.detach(), x), x));
    CHECK(x.grad()[0] == doctest::Approx(3.0));
  }

  TEST_CASE("leaky relu values") {
    Var x = constant(Tensor({3}, std::vector<Real>{1.0f, -1.0f, 0.0f}));
    const Tensor y = ops::leaky_relu(x, 0.03f).value();
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(-0.03));
    CHECK(y[2] == 0.0f);
  }

  TEST_CASE("shape mismatch is an error") {
    Var a = constant(Tensor({2, 3}));
    Var b = constant(Tensor({3, 2}));
    CHECK_THROWS_AS(ops::add(a, b), ShapeError);
  }

  TEST_CASE("permute and its inverse") {
    Tensor t({2, 3, 4, 5});
    for (Index i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(i);
    const Var p = ops::permute(constant(t), {0, 2, 3, 1});
    CHECK(p.dim(1) == 4);
    CHECK(p.dim(3) == 3);
    CHECK(p.value().at(1, 3, 4, 2) == t.at(1, 2, 3, 4));
    const Var back = ops::permute(p, {0, 3, 1, 2});
    CHECK(back.shape() == t.shape());
    for (Index i = 0; i < t.numel(); ++i) CHECK(back.value()[i] == t[i]);
  }
}
