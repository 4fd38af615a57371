// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "lct/discriminators.hpp"

using namespace lct;

namespace {

disc::DiscriminatorBankConfig small_bank() {
  disc::DiscriminatorBankConfig cfg;
  cfg.channel_divisor = 16;
  return cfg;
}

}  // namespace

TEST_SUITE("discriminators") {
  TEST_CASE("period folding pads by reflection") {
    Tensor x({1, 100});
    for (Index i = 0; i < 100; ++i) x[i] = static_cast<Real>(i);
    const Tensor f = disc::fold_period(constant(x), 3).value();
    CHECK(f.shape() == Shape{1, 1, 34, 3});
    CHECK(f.at(0, 0, 1, 2) == 5.0f);
    CHECK(f.at(0, 0, 33, 0) == 99.0f);
    CHECK(f.at(0, 0, 33, 1) == 98.0f);
    CHECK(f.at(0, 0, 33, 2) == 97.0f);
    CHECK(disc::fold_period(constant(Tensor({2, 99})), 3).shape() == Shape{2, 1, 33, 3});
  }

  TEST_CASE("bank layout") {
    disc::DiscriminatorBank bank(small_bank(), 1);
    CHECK(bank.size() == 8);
    CHECK(bank.period_count() == 5);
    std::mt19937_64 rng(2);
    const Var x = constant(testing::random_tensor({2, 1024}, rng, -0.5, 0.5));
    const auto out = bank(x);
    REQUIRE(out.size() == 8);
    for (std::size_t d = 0; d < 5; ++d) {
      CHECK(out[d].features.size() == 6);
      CHECK(out[d].score.dim(3) == bank.config().periods[d]);
    }
    for (std::size_t d = 5; d < 8; ++d) CHECK(out[d].features.size() == 8);
    for (const auto& o : out) CHECK(o.score.value().all_finite());
  }

  TEST_CASE("scale discriminators see 2x pooled signals") {
    disc::DiscriminatorBank bank(small_bank(), 3);
    std::mt19937_64 rng(4);
    const Var x = constant(testing::random_tensor({1, 1024}, rng));
    for (std::size_t s = 0; s < 3; ++s) {
      const auto out = bank.run_scale(s, x);
      // The first conv keeps the length.
      CHECK(out.features[0].dim(3) == 1024 >> s);
    }
    CHECK_THROWS_AS(bank.run_scale(3, x), ConfigError);
  }

  TEST_CASE("published channel sizes") {
    const disc::DiscriminatorBankConfig cfg;
    CHECK(cfg.period_stack().back().out_channels == 1024);
    CHECK(cfg.scale_stack()[2].groups == 16);
    CHECK(small_bank().period_stack().front().out_channels == 2);
  }

  TEST_CASE("every parameter receives gradient") {
    disc::DiscriminatorBank bank(small_bank(), 5);
    std::mt19937_64 rng(6);
    const Var real = constant(testing::random_tensor({1, 2048}, rng, -0.5, 0.5));
    const Var fake = constant(testing::random_tensor({1, 2048}, rng, -0.5, 0.5));
    backward(losses::adv_loss_disc(bank(real), bank(fake)));
    for (const auto& [name, var] : bank.params().entries()) {
      CAPTURE(name);
      REQUIRE(var.has_grad());
      CHECK(var.grad().all_finite());
      CHECK(var.grad().max_abs() > 0.0f);
    }
  }

  TEST_CASE("config validation") {
    disc::DiscriminatorBankConfig cfg;
    cfg.periods = {2, 4};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.periods = {1};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.periods = {};
    cfg.scales = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.channel_divisor = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_bank();
    CHECK(disc::DiscriminatorBankConfig::from_json(cfg.to_json()).channel_divisor == 16);
  }
}
