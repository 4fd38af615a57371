// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "lct/training/trainer.hpp"

using namespace lct;
using namespace lct::training;

namespace {

// Sets the gradient of every parameter of `store` to `g` through a linear probe.
void set_grads(nn::ParamStore& store, Real g) {
  store.zero_grad();
  for (auto& [name, var] : store.entries()) backward(ops::sum(ops::mul(var, constant(Tensor(var.shape(), g)))));
}

TrainConfig tiny(bool gan) {
  TrainConfig cfg = TrainConfig::toy();
  cfg.batch = 2;
  cfg.segment_seconds = 0.5;
  cfg.use_gan = gan;
  return cfg;
}

SourcePool small_pool() { return make_toy_pool(99, 2, 3.0); }

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("AdamW first step moves each weight by about lr") {
    nn::ParamStore store;
    store.add("w", Tensor({4}, Real{0}));
    AdamW opt(store, {1e-3, 0.9, 0.99, 1e-8, 1e-2});
    set_grads(store, 0.25f);
    opt.step(store);
    for (Index i = 0; i < 4; ++i) CHECK(store.entries()[0].second.value()[i] == doctest::Approx(-1e-3).epsilon(1e-4));
    set_grads(store, -3.0f);
    opt.step(store);
    CHECK(opt.steps() == 2);
  }

  TEST_CASE("AdamW with zero gradient only decays") {
    nn::ParamStore store;
    store.add("w", Tensor({3}, Real{2}));
    store.add("untouched", Tensor({2}, Real{-1}));
    AdamW opt(store, {1e-2, 0.9, 0.99, 1e-8, 0.1});
    store.zero_grad();
    opt.step(store);
    CHECK(store.entries()[0].second.value()[0] == doctest::Approx(2.0 * (1 - 1e-3)));
    CHECK(store.entries()[1].second.value()[1] == doctest::Approx(-1.0 * (1 - 1e-3)));
  }

  TEST_CASE("AdamW config validation") {
    AdamWConfig cfg;
    cfg.lr = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.beta2 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("mixing hits the requested SNR") {
    const auto clean = synth_voice(1, 100, 150, 16000);
    const auto noise = pink_noise(2, 7000);  // looped to the clean length
    for (double snr : {-5.0, 0.0, 7.5, 20.0}) {
      const Mixture m = mix_at_snr(clean, noise, snr);
      REQUIRE(m.mixture.size() == clean.size());
      CHECK(std::abs(snr_db(m.clean, m.noise) - snr) < 0.01);
      for (std::size_t i = 0; i < clean.size(); i += 997) CHECK(m.mixture[i] == doctest::Approx(m.clean[i] + m.noise[i]));
    }
    const std::vector<Real> silent(1000, 0.0f);
    CHECK_THROWS_AS(mix_at_snr(silent, noise, 0), NumericError);
    CHECK_THROWS_AS(mix_at_snr(clean, silent, 0), NumericError);
  }

  TEST_CASE("sampler batches depend only on seed and step") {
    SamplerConfig sc{2, 4000, -5, 20};
    MixtureSampler a(small_pool(), sc, 7), b(small_pool(), sc, 7);
    const Batch x = a.batch(5), y = b.batch(5), z = a.batch(6);
    auto same = [](const Tensor& a, const Tensor& b) { return std::ranges::equal(a.values(), b.values()); };
    CHECK(same(x.noisy, y.noisy));
    CHECK(!same(x.noisy, z.noisy));
    CHECK(x.noisy.shape() == Shape{2, 4000});
    for (double s : x.snr_db) CHECK((s >= -5 && s <= 20));
  }

  TEST_CASE("held-out sources are disjoint from training") {
    const HeldOutSet h = toy_heldout();
    CHECK(h.items.size() == 12);
    CHECK(h.items[0].clean.size() == 32000);
    CHECK(h.snr_db[0] == -5.0);
    CHECK(h.snr_db[4] == 0.0);
    const SourcePool train = make_toy_pool(model::kDefaultSeed);
    CHECK(train.clean[0] != make_toy_pool(kToyHeldOutSeed).clean[0]);
  }

  TEST_CASE("same seed, same training run") {
    Trainer a(model::ModelConfig{}, tiny(true), small_pool());
    Trainer b(model::ModelConfig{}, tiny(true), small_pool());
    const auto before = a.generator().params().checksum();
    for (int i = 0; i < 2; ++i) {
      const StepLog la = a.step(), lb = b.step();
      CHECK(la.gen_total == lb.gen_total);
      CHECK(la.disc == lb.disc);
      CHECK(std::isfinite(la.gen_total));
    }
    CHECK(a.generator().params().checksum() == b.generator().params().checksum());
    CHECK(a.generator().params().checksum() != before);
    CHECK(a.discriminators()->params().checksum() == b.discriminators()->params().checksum());
  }

  TEST_CASE("resumed training matches an uninterrupted run") {
    const auto path = std::filesystem::temp_directory_path() / "lct_resume_test.lct";
    Trainer full(model::ModelConfig{}, tiny(true), small_pool());
    for (int i = 0; i < 4; ++i) full.step();

    Trainer first(model::ModelConfig{}, tiny(true), small_pool());
    first.step();
    first.step();
    first.save(path);
    Trainer resumed(model::ModelConfig{}, tiny(true), small_pool());
    resumed.load(path);
    CHECK(resumed.current_step() == 2);
    resumed.step();
    resumed.step();
    CHECK(resumed.generator().params().checksum() == full.generator().params().checksum());
    CHECK(resumed.discriminators()->params().checksum() == full.discriminators()->params().checksum());
  }

  TEST_CASE("generator-only training lowers the smoothed loss") {
    TrainConfig cfg = tiny(false);
    cfg.steps = 60;
    Trainer t(model::ModelConfig{}, cfg, small_pool());
    std::vector<double> losses;
    t.run([&](const StepLog& log) { losses.push_back(log.multi_res); });
    REQUIRE(losses.size() == 60);
    const double head = std::accumulate(losses.begin(), losses.begin() + 20, 0.0) / 20;
    const double tail = std::accumulate(losses.end() - 20, losses.end(), 0.0) / 20;
    CHECK(tail < head);
    CHECK(t.discriminators() == nullptr);
  }

  TEST_CASE("train config round trip and validation") {
    TrainConfig cfg = TrainConfig::toy();
    const TrainConfig back = TrainConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    cfg.batch = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig::toy();
    cfg.snr_low = 30;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}
