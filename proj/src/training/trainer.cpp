// SPDX-License-Identifier: Apache-2.0

#include "lct/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "lct/analysis/metrics.hpp"
#include "lct/losses.hpp"
#include "lct/model/checkpoint.hpp"
#include "lct/model/enhance.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace training {
namespace {

nlohmann::json opt_json(const AdamWConfig& c) {
  return {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps},
          {"weight_decay", c.weight_decay}};
}

AdamWConfig opt_from_json(const nlohmann::json& j, AdamWConfig c) {
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  return c;
}

void require_finite(double value, const std::string& what, std::uint64_t batch_seed, Index step) {
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite " << what << " at step " << step << " (batch seed " << batch_seed << ")";
    throw NumericError(msg.str());
  }
}

void add_moments(model::Archive& a, const nn::ParamStore& params, const AdamW& opt,
                 const std::string& prefix) {
  const auto& entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    a.tensors.emplace_back(prefix + "m/" + entries[i].first, opt.first_moments()[i]);
    a.tensors.emplace_back(prefix + "v/" + entries[i].first, opt.second_moments()[i]);
  }
}

void restore_moments(const model::Archive& a, const nn::ParamStore& params, AdamW& opt,
                     const std::string& prefix) {
  const auto& entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (auto [kind, target] : {std::pair{"m/", &opt.first_moments()[i]},
                                std::pair{"v/", &opt.second_moments()[i]}}) {
      const std::string name = prefix + kind + entries[i].first;
      const Tensor* t = a.find(name);
      if (!t || t->shape() != target->shape())
        throw IoError("checkpoint is missing or misshapes optimizer tensor " + name);
      *target = *t;
    }
  }
}

const std::string kDiscPrefix = "discriminator/";
const std::string kGenOptPrefix = "opt.generator.";
const std::string kDiscOptPrefix = "opt.discriminator.";

}  // namespace

void TrainConfig::validate() const {
  generator_opt.validate();
  discriminator_opt.validate();
  check_config(batch >= 1, "batch must be positive");
  check_config(segment_seconds > 0, "segment length must be positive");
  check_config(snr_low <= snr_high, "SNR range must satisfy low <= high");
  check_config(steps >= 0, "steps must be non-negative");
  check_config(log_every >= 1, "log interval must be positive");
  check_config(checkpoint_every >= 0, "checkpoint interval must be non-negative");
  loss.validate();
  if (use_gan) discriminators.validate();
}

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.batch = 4;
  c.segment_seconds = 1.0;
  c.steps = 200;
  c.discriminators.channel_divisor = 16;
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json resolutions = nlohmann::json::object();
  for (const auto& [size, w] : loss.resolution_weights) resolutions[std::to_string(size)] = w;
  return {{"generator_opt", opt_json(generator_opt)},
          {"discriminator_opt", opt_json(discriminator_opt)},
          {"batch", batch},
          {"segment_seconds", segment_seconds},
          {"snr_low", snr_low},
          {"snr_high", snr_high},
          {"steps", steps},
          {"use_gan", use_gan},
          {"seed", seed},
          {"loss",
           {{"resolution_weights", resolutions},
            {"phase_blend", loss.phase_blend},
            {"compression", loss.compression},
            {"gamma", loss.gamma},
            {"adv_weight", loss.adv_weight},
            {"feature_matching_weight", loss.feature_matching_weight}}},
          {"discriminators", discriminators.to_json()},
          {"log_every", log_every},
          {"checkpoint_every", checkpoint_every}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    if (j.contains("generator_opt")) c.generator_opt = opt_from_json(j["generator_opt"], c.generator_opt);
    if (j.contains("discriminator_opt"))
      c.discriminator_opt = opt_from_json(j["discriminator_opt"], c.discriminator_opt);
    c.batch = j.value("batch", c.batch);
    c.segment_seconds = j.value("segment_seconds", c.segment_seconds);
    c.snr_low = j.value("snr_low", c.snr_low);
    c.snr_high = j.value("snr_high", c.snr_high);
    c.steps = j.value("steps", c.steps);
    c.use_gan = j.value("use_gan", c.use_gan);
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss")) {
      const auto& l = j["loss"];
      if (l.contains("resolution_weights")) {
        c.loss.resolution_weights.clear();
        for (const auto& [k, v] : l["resolution_weights"].items())
          c.loss.resolution_weights[std::stoll(k)] = v.get<double>();
      }
      c.loss.phase_blend = l.value("phase_blend", c.loss.phase_blend);
      c.loss.compression = l.value("compression", c.loss.compression);
      c.loss.gamma = l.value("gamma", c.loss.gamma);
      c.loss.adv_weight = l.value("adv_weight", c.loss.adv_weight);
      c.loss.feature_matching_weight = l.value("feature_matching_weight", c.loss.feature_matching_weight);
    }
    if (j.contains("discriminators"))
      c.discriminators = disc::DiscriminatorBankConfig::from_json(j["discriminators"]);
    c.log_every = j.value("log_every", c.log_every);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ConfigError("resolution weights must be keyed by FFT size");
  }
  c.validate();
  return c;
}

nlohmann::json StepLog::to_json() const {
  return {{"step", step},
          {"gen_total", gen_total},
          {"multi_res", multi_res},
          {"adv_gen", adv_gen},
          {"feature_matching", feature_matching},
          {"disc", disc},
          {"gen_grad_norm", gen_grad_norm},
          {"disc_grad_norm", disc_grad_norm},
          {"batch_seed", batch_seed},
          {"seconds", seconds}};
}

Trainer::Trainer(const model::ModelConfig& model_cfg, const TrainConfig& cfg, SourcePool pool)
    : config_((cfg.validate(), cfg)),
      generator_(std::make_unique<model::Generator>(model_cfg, cfg.seed)),
      discriminators_(cfg.use_gan ? std::make_unique<disc::DiscriminatorBank>(cfg.discriminators,
                                                                              cfg.seed + 1)
                                  : nullptr),
      gen_opt_(generator_->params(), cfg.generator_opt),
      sampler_(std::move(pool), SamplerConfig{cfg.batch, cfg.segment_samples(), cfg.snr_low, cfg.snr_high},
               cfg.seed) {
  if (discriminators_) disc_opt_.emplace(discriminators_->params(), cfg.discriminator_opt);
}

StepLog Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  StepLog log;
  log.step = step_;
  const Batch batch = sampler_.batch(step_);
  log.batch_seed = batch.seed;

  nn::ParamStore& gen_params = generator_->params();
  Var estimate = model::enhance_batch(*generator_, batch.noisy);
  const Var clean = constant(batch.clean);

  std::vector<losses::DiscOutput> real_out, fake_out;
  if (discriminators_) {
    nn::ParamStore& disc_params = discriminators_->params();
    disc_params.zero_grad();
    Var disc_loss = losses::adv_loss_disc((*discriminators_)(clean), (*discriminators_)(estimate.detach()));
    log.disc = disc_loss.value()[0];
    require_finite(log.disc, "discriminator loss", batch.seed, step_);
    backward(disc_loss);
    log.disc_grad_norm = grad_norm(disc_params);
    require_finite(log.disc_grad_norm, "discriminator gradient", batch.seed, step_);
    disc_opt_->step(disc_params);

    {
      NoGradGuard no_grad;
      real_out = (*discriminators_)(clean);
    }
    fake_out = (*discriminators_)(estimate);
  }

  gen_params.zero_grad();
  Var multi_res = losses::multi_res_loss(estimate, batch.clean, config_.loss);
  losses::GenLossParts parts = losses::total_gen_loss(multi_res, real_out, fake_out, config_.loss);
  log.gen_total = parts.total.value()[0];
  log.multi_res = parts.multi_res.value()[0];
  if (parts.adversarial) {
    log.adv_gen = parts.adversarial.value()[0];
    log.feature_matching = parts.feature_matching.value()[0];
  }
  require_finite(log.gen_total, "generator loss", batch.seed, step_);
  backward(parts.total);
  log.gen_grad_norm = grad_norm(gen_params);
  require_finite(log.gen_grad_norm, "generator gradient", batch.seed, step_);
  gen_opt_.step(gen_params);

  ++step_;
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

void Trainer::run(const std::function<void(const StepLog&)>& on_step) {
  while (step_ < config_.steps) {
    StepLog log = step();
    if (on_step) on_step(log);
  }
}

void Trainer::save(const std::filesystem::path& path) const {
  model::Archive a;
  a.kind = model::ArchiveKind::kFullGan;
  a.config = {{"model", generator_->config().to_json()},
              {"train", config_.to_json()},
              {"step", step_},
              {"opt_generator_t", gen_opt_.steps()},
              {"opt_discriminator_t", disc_opt_ ? disc_opt_->steps() : 0}};
  model::add_params(a, generator_->params(), model::kGeneratorPrefix);
  add_moments(a, generator_->params(), gen_opt_, kGenOptPrefix);
  if (discriminators_) {
    model::add_params(a, discriminators_->params(), kDiscPrefix);
    add_moments(a, discriminators_->params(), *disc_opt_, kDiscOptPrefix);
  }
  model::save_archive(path, a);
}

void Trainer::load(const std::filesystem::path& path) {
  const model::Archive a = model::load_archive(path);
  if (a.kind != model::ArchiveKind::kFullGan || !a.config.contains("step"))
    throw IoError(path.string() + " is not a training checkpoint");
  if (a.config["model"] != generator_->config().to_json())
    throw IoError("checkpoint model config differs from the requested model");
  model::restore_params(a, generator_->params(), model::kGeneratorPrefix);
  restore_moments(a, generator_->params(), gen_opt_, kGenOptPrefix);
  gen_opt_.set_steps(a.config.value("opt_generator_t", Index{0}));
  if (discriminators_) {
    model::restore_params(a, discriminators_->params(), kDiscPrefix);
    restore_moments(a, discriminators_->params(), *disc_opt_, kDiscOptPrefix);
    disc_opt_->set_steps(a.config.value("opt_discriminator_t", Index{0}));
  }
  step_ = a.config["step"].get<Index>();
}

HeldOutSet toy_heldout() { return make_toy_heldout(kToyHeldOutSeed, 12, 32000, {-5.0, 0.0, 5.0}); }

HeldOutScores evaluate_heldout(const model::Generator& gen, const HeldOutSet& set) {
  check_config(!set.items.empty(), "held-out set is empty");
  HeldOutScores s;
  for (const auto& item : set.items) {
    const auto enhanced = model::enhance_offline(gen, item.mixture);
    s.noisy_si_sdr += analysis::si_sdr(item.mixture, item.clean);
    s.enhanced_si_sdr += analysis::si_sdr(enhanced, item.clean);
  }
  s.noisy_si_sdr /= static_cast<double>(set.items.size());
  s.enhanced_si_sdr /= static_cast<double>(set.items.size());
  return s;
}

HeldOutScores evaluate_oracle_irm(const model::ModelConfig& cfg, const HeldOutSet& set) {
  check_config(!set.items.empty(), "held-out set is empty");
  const dsp::StftConfig stft_cfg = model::analysis_config(cfg);
  HeldOutScores s;
  for (const auto& item : set.items) {
    const auto length = static_cast<Index>(item.mixture.size());
    const Tensor noisy = dsp::stft_batch(Tensor({1, length}, item.mixture), stft_cfg);
    const Tensor clean = dsp::stft_batch(Tensor({1, length}, item.clean), stft_cfg);
    const Tensor irm = losses::compressed_irm(clean, noisy, cfg.compression, cfg.gamma);
    Tensor masked = noisy;
    for (Index i = 0; i < irm.numel(); ++i) {
      const Real m = static_cast<Real>(std::pow(static_cast<double>(irm[i]), 1.0 / cfg.compression));
      masked[2 * i] *= m;
      masked[2 * i + 1] *= m;
    }
    const Tensor out = dsp::istft_batch(masked, stft_cfg, length);
    s.noisy_si_sdr += analysis::si_sdr(item.mixture, item.clean);
    s.enhanced_si_sdr += analysis::si_sdr(out.values(), item.clean);
  }
  s.noisy_si_sdr /= static_cast<double>(set.items.size());
  s.enhanced_si_sdr /= static_cast<double>(set.items.size());
  return s;
}

}  // namespace training
}  // namespace LCT_PRECISION_NS
}  // namespace lct
