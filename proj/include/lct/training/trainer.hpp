// SPDX-License-Identifier: Apache-2.0
//
// Adversarial training loop. Each step first updates the discriminators on
// (clean, detached estimate), then the generator on the multi-resolution
// loss plus the weighted adversarial and feature-matching terms.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "lct/discriminators.hpp"
#include "lct/losses.hpp"
#include "lct/model/generator.hpp"
#include "lct/training/adamw.hpp"
#include "lct/training/data.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace training {

struct TrainConfig {
  AdamWConfig generator_opt{5e-4, 0.9, 0.99, 1e-8, 1e-2};
  AdamWConfig discriminator_opt{1e-4, 0.8, 0.99, 1e-8, 1e-2};
  Index batch = 8;
  double segment_seconds = 2.0;
  double snr_low = -5.0;
  double snr_high = 20.0;
  Index steps = 1000;
  bool use_gan = true;
  std::uint64_t seed = model::kDefaultSeed;
  losses::LossWeights loss;
  disc::DiscriminatorBankConfig discriminators;
  Index log_every = 10;
  Index checkpoint_every = 0;  // 0: only at the end

  void validate() const;
  Index segment_samples() const { return static_cast<Index>(segment_seconds * 16000.0 + 0.5); }

  /// Desk-scale settings for the procedural toy corpus.
  static TrainConfig toy();

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct StepLog {
  Index step = 0;
  double gen_total = 0;
  double multi_res = 0;
  double adv_gen = 0;
  double feature_matching = 0;
  double disc = 0;
  double gen_grad_norm = 0;
  double disc_grad_norm = 0;
  std::uint64_t batch_seed = 0;
  double seconds = 0;

  nlohmann::json to_json() const;
};

class Trainer {
 public:
  Trainer(const model::ModelConfig& model_cfg, const TrainConfig& cfg, SourcePool pool);

  /// Runs one step and returns its log. Throws NumericError on a non-finite
  /// loss or gradient, naming the batch seed.
  StepLog step();
  /// Runs until `cfg.steps`, calling `on_step` after each step.
  void run(const std::function<void(const StepLog&)>& on_step = {});

  Index current_step() const { return step_; }
  const TrainConfig& config() const { return config_; }
  model::Generator& generator() { return *generator_; }
  const model::Generator& generator() const { return *generator_; }
  disc::DiscriminatorBank* discriminators() { return discriminators_.get(); }
  const MixtureSampler& sampler() const { return sampler_; }

  /// Full training state (generator, discriminators, optimizer moments, step).
  void save(const std::filesystem::path& path) const;
  /// Restores a state written by save(); configs must describe the same shapes.
  void load(const std::filesystem::path& path);

 private:
  TrainConfig config_;
  std::unique_ptr<model::Generator> generator_;
  std::unique_ptr<disc::DiscriminatorBank> discriminators_;
  AdamW gen_opt_;
  std::optional<AdamW> disc_opt_;
  MixtureSampler sampler_;
  Index step_ = 0;
};

struct HeldOutScores {
  double noisy_si_sdr = 0;     // mean over items, dB
  double enhanced_si_sdr = 0;  // mean over items, dB
  double improvement() const { return enhanced_si_sdr - noisy_si_sdr; }
};

/// Toy evaluation set: 12 two-second mixtures at -5, 0 and 5 dB drawn from
/// a pool seeded apart from the training pool.
inline constexpr std::uint64_t kToyHeldOutSeed = 12345;
HeldOutSet toy_heldout();

/// Mean SI-SDR of the noisy mixtures and of the offline-enhanced outputs.
HeldOutScores evaluate_heldout(const model::Generator& gen, const HeldOutSet& set);

/// Same protocol with the compressed IRM computed from the true clean and
/// noisy spectra, linearised as IRM^(1/c), in place of the network mask.
HeldOutScores evaluate_oracle_irm(const model::ModelConfig& cfg, const HeldOutSet& set);

}  // namespace training
}  // namespace LCT_PRECISION_NS
}  // namespace lct
