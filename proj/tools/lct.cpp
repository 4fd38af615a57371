// SPDX-License-Identifier: Apache-2.0
//
// lct: enhance, profile, train and eval subcommands.
// Exit codes: 0 success, 1 usage, 2 I/O, 3 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lct/analysis/complexity.hpp"
#include "lct/analysis/metrics.hpp"
#include "lct/dsp/wav.hpp"
#include "lct/model/checkpoint.hpp"
#include "lct/model/enhance.hpp"
#include "lct/model/stream.hpp"
#include "lct/training/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lct;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config_file;
  std::uint64_t seed = model::kDefaultSeed;
};

struct ModelFlags {
  std::optional<std::string> bottleneck;
  std::optional<Index> lookahead;
  std::optional<Index> context;
};

json read_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("config file " + path + ": " + e.what());
  }
}

// defaults < config file < flags
model::ModelConfig resolve_model(model::ModelConfig base, const json& file, const ModelFlags& flags) {
  if (file.contains("model")) {
    json merged = base.to_json();
    merged.merge_patch(file["model"]);
    base = model::ModelConfig::from_json(merged);
  }
  if (flags.bottleneck) base.bottleneck = *flags.bottleneck;
  if (flags.lookahead) base.lookahead = *flags.lookahead;
  if (flags.context) base.context_frames = *flags.context;
  base.validate();
  return base;
}

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
  cmd->add_option("--bottleneck", flags.bottleneck, "Transformer sequence, e.g. FTF");
  cmd->add_option("--lookahead", flags.lookahead, "Look-ahead frames (0 or 1)")->check(CLI::Range(0, 1));
  cmd->add_option("--context", flags.context, "Time-attention context in frames")->check(CLI::PositiveNumber);
}

void print_summary(const model::ModelConfig& cfg, const std::string& mode, std::size_t samples) {
  std::printf("mode %s  bottleneck %s  lookahead %ld  latency %.1f ms  samples %zu\n", mode.c_str(),
              cfg.bottleneck.c_str(), static_cast<long>(cfg.lookahead), cfg.latency_ms(), samples);
}

// ---------------------------------------------------------------- enhance

struct EnhanceOptions {
  std::string input, output, model;
  bool stream = false, offline = false, check = false;
  ModelFlags flags;
};

model::Generator build_generator(const Common& common, const ModelFlags& flags, const std::string& path) {
  const json file = read_config_file(common.config_file);
  if (path.empty()) {
    std::cerr << "note: no --model given, using untrained weights (seed " << common.seed << ")\n";
    return model::Generator(resolve_model({}, file, flags), common.seed);
  }
  if (flags.bottleneck) throw ConfigError("--bottleneck conflicts with --model (architecture comes from the checkpoint)");
  if (flags.context) throw ConfigError("--context conflicts with --model (architecture comes from the checkpoint)");
  model::Archive archive = model::load_archive(path);
  if (!archive.config.contains("model")) throw IoError(path + ": archive has no model config");
  // Look-ahead changes only the attention mask, so trained weights carry over.
  if (flags.lookahead) archive.config["model"]["lookahead"] = *flags.lookahead;
  return model::generator_from_archive(archive);
}

int cmd_enhance(const Common& common, const EnhanceOptions& o) {
  const dsp::Wave in = dsp::read_wav(o.input);
  const model::Generator gen = build_generator(common, o.flags, o.model);
  const bool stream = o.stream;
  const auto out = stream ? model::enhance_streaming(gen, in.samples)
                          : model::enhance_offline(gen, in.samples, in.sample_rate);
  for (Real v : out)
    if (!std::isfinite(v)) throw NumericError("non-finite output sample");
  dsp::write_wav(o.output, out, in.format, in.sample_rate);
  print_summary(gen.config(), stream ? "stream" : "offline", out.size());
  if (o.check) {
    const auto other = stream ? model::enhance_offline(gen, in.samples, in.sample_rate)
                              : model::enhance_streaming(gen, in.samples);
    double diff = 0;
    for (std::size_t i = 0; i < out.size(); ++i)
      diff = std::max(diff, std::abs(static_cast<double>(out[i]) - static_cast<double>(other[i])));
    std::printf("stream/offline max abs difference %.3g\n", diff);
    if (diff >= 1e-5) throw NumericError("stream and offline outputs differ beyond 1e-5");
  }
  return 0;
}

// ---------------------------------------------------------------- profile

struct ProfileOptions {
  ModelFlags flags;
  double seconds = 1.0;
  bool grid = false, cruse = false;
  Index cruse_layers = 2, cruse_groups = 16;
  std::string kv_file, csv_file;
};

int cmd_profile(const Common& common, const ProfileOptions& o) {
  const model::ModelConfig cfg = resolve_model({}, read_config_file(common.config_file), o.flags);
  const analysis::ComplexityReport report = analysis::analyse(cfg, o.seconds);
  std::cout << report.to_text();
  if (!o.kv_file.empty()) {
    std::ofstream out(o.kv_file);
    if (!out) throw IoError("cannot write " + o.kv_file);
    out << report.to_key_values();
  }
  const analysis::CruseReference ref{o.cruse_layers, o.cruse_groups};
  if (o.grid) {
    const std::string table = analysis::grid_csv(analysis::ablation_grid(cfg));
    std::cout << "\n" << table;
    if (!o.csv_file.empty()) {
      std::ofstream out(o.csv_file);
      if (!out) throw IoError("cannot write " + o.csv_file);
      out << table;
    }
  }
  if (o.grid || o.cruse) std::cout << "\n" << analysis::cruse_comparison(cfg, ref).to_text();
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  bool toy = false;
  std::string manifest;
  ModelFlags flags;
  std::optional<Index> steps, batch, checkpoint_every, log_every, disc_divisor;
  std::optional<double> segment_seconds, gen_lr, disc_lr, snr_low, snr_high;
  bool no_gan = false, eval = false;
  std::string out = "lct_checkpoint.lct";
  std::string resume, metrics;
};

training::TrainConfig resolve_train(training::TrainConfig base, const json& file, const TrainOptions& o,
                                    std::uint64_t seed, bool seed_given) {
  if (file.contains("train")) {
    json merged = base.to_json();
    merged.merge_patch(file["train"]);
    base = training::TrainConfig::from_json(merged);
  }
  if (seed_given) base.seed = seed;
  if (o.steps) base.steps = *o.steps;
  if (o.batch) base.batch = *o.batch;
  if (o.segment_seconds) base.segment_seconds = *o.segment_seconds;
  if (o.gen_lr) base.generator_opt.lr = *o.gen_lr;
  if (o.disc_lr) base.discriminator_opt.lr = *o.disc_lr;
  if (o.snr_low) base.snr_low = *o.snr_low;
  if (o.snr_high) base.snr_high = *o.snr_high;
  if (o.disc_divisor) base.discriminators.channel_divisor = *o.disc_divisor;
  if (o.checkpoint_every) base.checkpoint_every = *o.checkpoint_every;
  if (o.log_every) base.log_every = *o.log_every;
  if (o.no_gan) base.use_gan = false;
  base.validate();
  return base;
}

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double s = 0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return end > begin ? s / static_cast<double>(end - begin) : 0.0;
}

int cmd_train(const Common& common, bool seed_given, const TrainOptions& o) {
  const json file = read_config_file(common.config_file);
  model::ModelConfig model_base;
  training::TrainConfig train_base = o.toy ? training::TrainConfig::toy() : training::TrainConfig{};
  train_base.seed = common.seed;
  if (!o.resume.empty()) {
    // A resumed run starts from the settings stored in the checkpoint.
    const model::Archive a = model::load_archive(o.resume);
    if (!a.config.contains("model") || !a.config.contains("train"))
      throw IoError(o.resume + " is not a training checkpoint");
    if (o.flags.bottleneck || o.flags.lookahead || o.flags.context)
      throw ConfigError("model flags conflict with --resume (architecture comes from the checkpoint)");
    model_base = model::ModelConfig::from_json(a.config["model"]);
    train_base = training::TrainConfig::from_json(a.config["train"]);
  }
  const model::ModelConfig mcfg = resolve_model(model_base, file, o.flags);
  const training::TrainConfig tcfg = resolve_train(train_base, file, o, common.seed, seed_given);

  training::SourcePool pool = o.toy ? training::make_toy_pool(tcfg.seed) : training::load_manifest(o.manifest);
  training::Trainer trainer(mcfg, tcfg, std::move(pool));
  if (!o.resume.empty()) {
    trainer.load(o.resume);
    std::printf("resumed at step %ld\n", static_cast<long>(trainer.current_step()));
  }

  std::ofstream metrics;
  if (!o.metrics.empty()) {
    metrics.open(o.metrics, std::ios::app);
    if (!metrics) throw IoError("cannot write " + o.metrics);
  }
  std::vector<double> losses;
  trainer.run([&](const training::StepLog& log) {
    losses.push_back(log.multi_res);
    if (metrics) metrics << log.to_json().dump() << "\n" << std::flush;
    const bool last = log.step + 1 == tcfg.steps;
    if (tcfg.log_every > 0 && (log.step % tcfg.log_every == 0 || last)) {
      std::printf("step %5ld  gen %.4f  multi_res %.4f  adv %.4f  fm %.4f  disc %.4f  %.2fs\n",
                  static_cast<long>(log.step), log.gen_total, log.multi_res, log.adv_gen,
                  log.feature_matching, log.disc, log.seconds);
      std::fflush(stdout);
    }
    if (tcfg.checkpoint_every > 0 && (log.step + 1) % tcfg.checkpoint_every == 0 && !last)
      trainer.save(o.out);
  });
  trainer.save(o.out);
  std::printf("checkpoint %s at step %ld\n", o.out.c_str(), static_cast<long>(trainer.current_step()));

  if (losses.size() >= 2) {
    const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(10, losses.size() / 2));
    std::printf("multi_res smoothed initial %.4f final %.4f\n", mean_of(losses, 0, w),
                mean_of(losses, losses.size() - w, losses.size()));
  }
  if (o.eval && o.toy) {
    const auto scores = training::evaluate_heldout(trainer.generator(), training::toy_heldout());
    std::printf("held-out SI-SDR noisy %.2f dB enhanced %.2f dB improvement %+.2f dB\n", scores.noisy_si_sdr,
                scores.enhanced_si_sdr, scores.improvement());
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string clean_dir, noisy_dir, model;
  bool toy = false;
  ModelFlags flags;
};

int cmd_eval(const Common& common, const EvalOptions& o) {
  const model::Generator gen = build_generator(common, o.flags, o.model);
  if (o.toy) {
    const auto s = training::evaluate_heldout(gen, training::toy_heldout());
    std::printf("toy held-out  noisy %.2f dB  enhanced %.2f dB  delta %+.2f dB\n", s.noisy_si_sdr,
                s.enhanced_si_sdr, s.improvement());
    return 0;
  }
  if (!fs::is_directory(o.clean_dir)) throw IoError("not a directory: " + o.clean_dir);
  if (!fs::is_directory(o.noisy_dir)) throw IoError("not a directory: " + o.noisy_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(o.noisy_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .wav files in " + o.noisy_dir);

  double noisy_sum = 0, enhanced_sum = 0;
  for (const auto& path : files) {
    const fs::path clean_path = fs::path(o.clean_dir) / path.filename();
    const dsp::Wave noisy = dsp::read_wav(path);
    const dsp::Wave clean = dsp::read_wav(clean_path);
    if (noisy.samples.size() != clean.samples.size())
      throw IoError("length mismatch between " + path.string() + " and " + clean_path.string());
    const auto enhanced = model::enhance_offline(gen, noisy.samples, noisy.sample_rate);
    const double a = analysis::si_sdr(noisy.samples, clean.samples);
    const double b = analysis::si_sdr(enhanced, clean.samples);
    noisy_sum += a;
    enhanced_sum += b;
    std::printf("%s  noisy %.2f dB  enhanced %.2f dB  delta %+.2f dB\n", path.filename().string().c_str(), a, b,
                b - a);
  }
  const double n = static_cast<double>(files.size());
  std::printf("mean (%zu files)  noisy %.2f dB  enhanced %.2f dB  delta %+.2f dB\n", files.size(),
              noisy_sum / n, enhanced_sum / n, (enhanced_sum - noisy_sum) / n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lightweight causal transformer speech enhancement"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_file, "JSON file with \"model\" and \"train\" sections");
  auto* seed_opt = app.add_option("--seed", common.seed, "Seed for every random operation");

  EnhanceOptions enh;
  auto* enhance = app.add_subcommand("enhance", "Enhance a 16 kHz mono WAV file");
  enhance->add_option("input", enh.input)->required();
  enhance->add_option("output", enh.output)->required();
  enhance->add_option("--model", enh.model, "Checkpoint");
  auto* stream_flag = enhance->add_flag("--stream", enh.stream, "Frame-by-frame streaming inference");
  auto* offline_flag = enhance->add_flag("--offline", enh.offline, "Whole-utterance inference (default)");
  stream_flag->excludes(offline_flag);
  enhance->add_flag("--check", enh.check, "Also run the other path and compare outputs");
  add_model_flags(enhance, enh.flags);

  ProfileOptions prof;
  auto* profile = app.add_subcommand("profile", "Parameter, MAC and latency report");
  add_model_flags(profile, prof.flags);
  profile->add_option("--seconds", prof.seconds, "Audio duration for the MAC total")->check(CLI::PositiveNumber);
  profile->add_flag("--grid", prof.grid, "All eight bottleneck variants plus the flattened-GRU comparison");
  profile->add_flag("--cruse", prof.cruse, "Flattened-GRU bottleneck comparison");
  profile->add_option("--cruse-layers", prof.cruse_layers)->check(CLI::PositiveNumber);
  profile->add_option("--cruse-groups", prof.cruse_groups)->check(CLI::PositiveNumber);
  profile->add_option("--kv", prof.kv_file, "Write the report as key=value lines");
  profile->add_option("--csv", prof.csv_file, "Write the grid table");

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train the generator");
  auto* toy_flag = train->add_flag("--toy", tr.toy, "Procedural toy corpus and desk preset");
  auto* manifest_opt = train->add_option("--manifest", tr.manifest, "Lines of 'clean.wav noise.wav'");
  toy_flag->excludes(manifest_opt);
  add_model_flags(train, tr.flags);
  train->add_option("--steps", tr.steps)->check(CLI::PositiveNumber);
  train->add_option("--batch", tr.batch)->check(CLI::PositiveNumber);
  train->add_option("--segment-seconds", tr.segment_seconds)->check(CLI::PositiveNumber);
  train->add_option("--gen-lr", tr.gen_lr);
  train->add_option("--disc-lr", tr.disc_lr);
  train->add_option("--snr-low", tr.snr_low);
  train->add_option("--snr-high", tr.snr_high);
  train->add_option("--disc-divisor", tr.disc_divisor)->check(CLI::PositiveNumber);
  train->add_flag("--no-gan", tr.no_gan, "Multi-resolution loss only");
  train->add_option("--out", tr.out, "Checkpoint path");
  train->add_option("--resume", tr.resume, "Continue from a training checkpoint");
  train->add_option("--checkpoint-every", tr.checkpoint_every);
  train->add_option("--log-every", tr.log_every);
  train->add_option("--metrics", tr.metrics, "Append one JSON object per step");
  train->add_flag("--eval", tr.eval, "Score the toy held-out set at the end (with --toy)");

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "SI-SDR of noisy and enhanced files");
  auto* clean_opt = eval->add_option("--clean", ev.clean_dir);
  auto* noisy_opt = eval->add_option("--noisy", ev.noisy_dir);
  auto* eval_toy = eval->add_flag("--toy", ev.toy, "Use the toy held-out mixtures");
  clean_opt->needs(noisy_opt);
  noisy_opt->needs(clean_opt);
  eval_toy->excludes(clean_opt);
  eval_toy->excludes(noisy_opt);
  eval->add_option("--model", ev.model, "Checkpoint");
  add_model_flags(eval, ev.flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*enhance) return cmd_enhance(common, enh);
    if (*profile) return cmd_profile(common, prof);
    if (*train) {
      if (!tr.toy && tr.manifest.empty()) throw ConfigError("train needs --toy or --manifest");
      return cmd_train(common, seed_opt->count() > 0, tr);
    }
    if (*eval) {
      if (!ev.toy && ev.clean_dir.empty()) throw ConfigError("eval needs --clean and --noisy, or --toy");
      return cmd_eval(common, ev);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
