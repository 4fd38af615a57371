// SPDX-License-Identifier: Apache-2.0
//
// Tiny random instances of every differentiable op and of both loss
// families, shared by the unit tests and the acceptance runner.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "lct/discriminators.hpp"
#include "lct/losses.hpp"
#include "lct/ops.hpp"

namespace lct::testing {

struct GradCase {
  std::string name;
  std::string family;  // "op", "spectral loss" or "adversarial loss"
  std::function<GradReport(std::mt19937_64&)> run;
};

inline Tensor positive_tensor(Shape shape, std::mt19937_64& rng) { return random_tensor(std::move(shape), rng, 0.2, 1.5); }

inline std::vector<GradCase> grad_cases() {
  using kernels::ConvGeometry;
  using kernels::TrapezoidMask;
  std::vector<GradCase> cases;
  auto add = [&](std::string name, std::string family, std::function<GradReport(std::mt19937_64&)> run) {
    cases.push_back({std::move(name), std::move(family), std::move(run)});
  };

  add("add", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::add(v[0], v[1]); },
                      {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)}, rng);
  });
  add("sub", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::sub(v[0], v[1]); },
                      {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)}, rng);
  });
  add("mul", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::mul(v[0], v[1]); },
                      {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)}, rng);
  });
  add("scale", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::scale(v[0], -1.7); }, {random_tensor({4}, rng)}, rng);
  });
  add("sum", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::sum(v[0]); }, {random_tensor({3, 2}, rng)}, rng);
  });
  add("mean", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::mean(v[0]); }, {random_tensor({3, 2}, rng)}, rng);
  });
  add("leaky_relu", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::leaky_relu(v[0], 0.03); }, {random_tensor({12}, rng)}, rng);
  });
  add("sigmoid", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::sigmoid(v[0]); }, {random_tensor({12}, rng, -3, 3)}, rng);
  });
  add("power", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::power(v[0], 1.0 / 0.3); }, {positive_tensor({8}, rng)}, rng);
  });
  add("reshape", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::reshape(v[0], {3, 4}); }, {random_tensor({2, 6}, rng)}, rng);
  });
  add("permute", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::permute(v[0], {0, 3, 2, 1}); },
                      {random_tensor({2, 3, 4, 5}, rng)}, rng);
  });
  add("concat_channels", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::concat_channels(v[0], v[1]); },
                      {random_tensor({2, 1, 3, 2}, rng), random_tensor({2, 2, 3, 2}, rng)}, rng);
  });
  add("linear", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::linear(v[0], v[1], v[2]); },
                      {random_tensor({2, 3, 4}, rng), random_tensor({5, 4}, rng), random_tensor({5}, rng)}, rng);
  });
  add("conv2d causal stride", "op", [](auto& rng) {
    const ConvGeometry g{2, 3, 1, 2, 1, 0, 1, 1, 1};
    return grad_check([g](const auto& v) { return ops::conv2d(v[0], v[1], v[2], g); },
                      {random_tensor({2, 2, 4, 7}, rng), random_tensor({3, 2, 2, 3}, rng), random_tensor({3}, rng)},
                      rng);
  });
  add("conv2d grouped", "op", [](auto& rng) {
    const ConvGeometry g{3, 1, 2, 1, 1, 1, 0, 0, 2};
    return grad_check([g](const auto& v) { return ops::conv2d(v[0], v[1], v[2], g); },
                      {random_tensor({1, 4, 9, 2}, rng), random_tensor({6, 2, 3, 1}, rng), random_tensor({6}, rng)},
                      rng);
  });
  add("conv_transpose2d", "op", [](auto& rng) {
    const ConvGeometry g{2, 3, 1, 2, 0, 1, 1, 1, 1};
    return grad_check([g](const auto& v) { return ops::conv_transpose2d(v[0], v[1], v[2], g); },
                      {random_tensor({2, 3, 3, 4}, rng), random_tensor({3, 2, 2, 3}, rng), random_tensor({2}, rng)},
                      rng);
  });
  add("layer_norm", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::layer_norm(v[0], v[1], v[2]); },
                      {random_tensor({3, 6}, rng), random_tensor({6}, rng), random_tensor({6}, rng)}, rng);
  });
  add("grouped gru", "op", [](auto& rng) {
    // groups 2, feature 4, hidden 4, 3 steps
    return grad_check([](const auto& v) { return ops::gru(v[0], v[1], v[2], v[3]); },
                      {random_tensor({2, 3, 4}, rng), random_tensor({2, 6, 2}, rng), random_tensor({2, 6, 2}, rng),
                       random_tensor({2, 6}, rng)},
                      rng);
  });
  add("attention trapezoid", "op", [](auto& rng) {
    const auto mask = TrapezoidMask::causal(3, 1);
    return grad_check([mask](const auto& v) { return ops::attention(v[0], v[1], v[2], 2, mask); },
                      {random_tensor({2, 6, 4}, rng), random_tensor({2, 6, 4}, rng), random_tensor({2, 6, 4}, rng)},
                      rng);
  });
  add("attention unmasked", "op", [](auto& rng) {
    return grad_check(
        [](const auto& v) { return ops::attention(v[0], v[1], v[2], 2, TrapezoidMask::unbounded()); },
        {random_tensor({1, 5, 4}, rng), random_tensor({1, 5, 4}, rng), random_tensor({1, 5, 4}, rng)}, rng);
  });
  add("weight_norm", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::weight_norm(v[0], v[1]); },
                      {random_tensor({3, 2, 2, 1}, rng), positive_tensor({3}, rng)}, rng);
  });
  add("avg_pool2_last", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::avg_pool2_last(v[0]); }, {random_tensor({2, 9}, rng)}, rng);
  });
  add("reflect_pad_right", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::reflect_pad_right(v[0], 3); }, {random_tensor({2, 7}, rng)},
                      rng);
  });
  add("crop_last", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::crop_last(v[0], 5); }, {random_tensor({2, 8}, rng)}, rng);
  });
  add("stft", "op", [](auto& rng) {
    const auto cfg = dsp::StftConfig::with_size(16);
    return grad_check([cfg](const auto& v) { return ops::stft(v[0], cfg); }, {random_tensor({2, 37}, rng)}, rng);
  });
  add("istft", "op", [](auto& rng) {
    const auto cfg = dsp::StftConfig::with_size(16);
    const Index frames = dsp::frame_count(37, cfg);
    return grad_check([cfg](const auto& v) { return ops::istft(v[0], cfg, 37); },
                      {random_tensor({2, frames, cfg.bins(), 2}, rng)}, rng);
  });
  add("apply_mask", "op", [](auto& rng) {
    const Tensor spec = random_tensor({2, 3, 5, 2}, rng);
    return grad_check([spec](const auto& v) { return ops::apply_mask(v[0], spec); },
                      {random_tensor({2, 3, 5}, rng, 0, 1)}, rng);
  });
  add("mse_to", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::mse_to(v[0], 1.0); }, {random_tensor({7}, rng)}, rng);
  });
  add("mean_abs_diff", "op", [](auto& rng) {
    return grad_check([](const auto& v) { return ops::mean_abs_diff(v[0], v[1]); },
                      {random_tensor({7}, rng), random_tensor({7}, rng)}, rng);
  });

  add("compressed spectral loss", "spectral loss", [](auto& rng) {
    const Tensor ref = random_tensor({2, 3, 5, 2}, rng);
    return grad_check([ref](const auto& v) { return ops::compressed_spectral_loss(v[0], ref, 0.3, 0.3); },
                      {random_tensor({2, 3, 5, 2}, rng)}, rng);
  });
  add("multi-resolution loss", "spectral loss", [](auto& rng) {
    // The loss resolutions need at least one 768-sample frame.
    const Tensor ref = random_tensor({1, 800}, rng, -0.3, 0.3);
    const losses::LossWeights w;
    return grad_check([ref, w](const auto& v) { return losses::multi_res_loss(v[0], ref, w); },
                      {random_tensor({1, 800}, rng, -0.3, 0.3)}, rng);
  });

  auto tiny_bank = [](std::mt19937_64& rng) {
    disc::DiscriminatorBankConfig cfg;
    cfg.periods = {2, 3};
    cfg.scales = 2;
    cfg.channel_divisor = 64;
    return std::make_shared<disc::DiscriminatorBank>(cfg, rng());
  };
  add("generator LS adversarial", "adversarial loss", [tiny_bank](auto& rng) {
    auto bank = tiny_bank(rng);
    return grad_check_directional([bank](const auto& v) { return losses::adv_loss_gen((*bank)(v[0])); },
                      {random_tensor({1, 48}, rng, -0.5, 0.5)}, rng);
  });
  add("feature matching", "adversarial loss", [tiny_bank](auto& rng) {
    auto bank = tiny_bank(rng);
    const Tensor real = random_tensor({1, 48}, rng, -0.5, 0.5);
    return grad_check_directional(
        [bank, real](const auto& v) {
          std::vector<losses::DiscOutput> r;
          {
            NoGradGuard guard;
            r = (*bank)(constant(real));
          }
          return losses::feature_matching(r, (*bank)(v[0]));
        },
        {random_tensor({1, 48}, rng, -0.5, 0.5)}, rng);
  });
  add("discriminator LS", "adversarial loss", [tiny_bank](auto& rng) {
    auto bank = tiny_bank(rng);
    return grad_check_directional(
        [bank](const auto& v) { return losses::adv_loss_disc((*bank)(v[0]), (*bank)(v[1])); },
        {random_tensor({1, 48}, rng, -0.5, 0.5), random_tensor({1, 48}, rng, -0.5, 0.5)}, rng);
  });
  add("discriminator parameters", "adversarial loss", [tiny_bank](auto& rng) {
    auto bank = tiny_bank(rng);
    const Tensor real = random_tensor({1, 48}, rng, -0.5, 0.5);
    const Tensor fake = random_tensor({1, 48}, rng, -0.5, 0.5);
    return grad_check_params(
        [bank, real, fake] { return losses::adv_loss_disc((*bank)(constant(real)), (*bank)(constant(fake))); },
        bank->params(), rng);
  });
  return cases;
}

}  // namespace lct::testing
