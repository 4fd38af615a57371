// SPDX-License-Identifier: Apache-2.0

#include "lct/training/data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "lct/dsp/wav.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace training {
namespace {

constexpr double kToyRms = 0.1;
constexpr int kMaxResamples = 100;

double mean_power(std::span<const Real> x) {
  double acc = 0;
  for (Real v : x) acc += static_cast<double>(v) * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

void normalise_rms(std::vector<Real>& x, double target) {
  const double p = mean_power(x);
  if (p <= 0) return;
  const double g = target / std::sqrt(p);
  for (Real& v : x) v = static_cast<Real>(v * g);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

double snr_db(std::span<const Real> signal, std::span<const Real> noise) {
  return 10.0 * std::log10(mean_power(signal) / mean_power(noise));
}

Mixture mix_at_snr(std::span<const Real> clean, std::span<const Real> noise, double snr) {
  check_shape(!clean.empty() && !noise.empty(), "mix_at_snr needs non-empty signals");
  const double pc = mean_power(clean);
  if (!(pc > kSilencePower)) throw NumericError("clean segment is silent; cannot set an SNR");
  Mixture m;
  m.clean.assign(clean.begin(), clean.end());
  m.noise.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) m.noise[i] = noise[i % noise.size()];
  const double pn = mean_power(m.noise);
  if (!(pn > 0)) throw NumericError("noise segment is all zeros; cannot set an SNR");
  const double gain = std::sqrt(pc / (pn * std::pow(10.0, snr / 10.0)));
  m.mixture.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    m.noise[i] = static_cast<Real>(m.noise[i] * gain);
    m.mixture[i] = m.clean[i] + m.noise[i];
  }
  return m;
}

std::vector<Real> synth_voice(std::uint64_t seed, double f0_low, double f0_high, Index samples,
                              int sample_rate) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fs = sample_rate;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<Real> out(static_cast<std::size_t>(samples), Real{0});
  Index pos = static_cast<Index>(fs * (0.02 + 0.08 * u(rng)));
  while (pos < samples) {
    const Index len = static_cast<Index>(fs * (0.12 + 0.23 * u(rng)));
    const double f_start = f0_low + (f0_high - f0_low) * u(rng);
    const double f_end = f_start * (0.85 + 0.3 * u(rng));
    const double formant1 = 300 + 600 * u(rng), formant2 = 900 + 1600 * u(rng);
    const double am_rate = 3.0 + 3.0 * u(rng);
    const double level = 0.5 + u(rng);
    const int harmonics = static_cast<int>(5000.0 / std::max(f_start, f_end));
    std::vector<double> phase(static_cast<std::size_t>(harmonics), 0.0);
    for (auto& p : phase) p = two_pi * u(rng);
    for (Index n = 0; n < len && pos + n < samples; ++n) {
      const double s = static_cast<double>(n) / static_cast<double>(len);
      const double f0 = f_start + (f_end - f_start) * s;
      const double env = std::sqrt(std::sin(std::numbers::pi * s)) *
                         (1.0 + 0.3 * std::sin(two_pi * am_rate * static_cast<double>(n) / fs));
      double acc = 0;
      for (int h = 1; h <= harmonics; ++h) {
        const double f = h * f0;
        const double a = 1.0 / (1.0 + std::pow((f - formant1) / 150.0, 2)) +
                         0.6 / (1.0 + std::pow((f - formant2) / 250.0, 2)) + 0.05 / h;
        auto& p = phase[static_cast<std::size_t>(h - 1)];
        p += two_pi * f / fs;
        acc += a * std::sin(p);
      }
      out[static_cast<std::size_t>(pos + n)] += static_cast<Real>(level * env * acc);
    }
    pos += len + static_cast<Index>(fs * (0.04 + 0.11 * u(rng)));
  }
  normalise_rms(out, kToyRms);
  return out;
}

std::vector<Real> white_noise(std::uint64_t seed, Index samples) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Real> out(static_cast<std::size_t>(samples));
  for (Real& v : out) v = static_cast<Real>(n(rng));
  normalise_rms(out, kToyRms);
  return out;
}

std::vector<Real> pink_noise(std::uint64_t seed, Index samples) {
  // Paul Kellet's refined 1/f filter on white noise.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  std::vector<Real> out(static_cast<std::size_t>(samples));
  for (Real& v : out) {
    const double w = n(rng);
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    v = static_cast<Real>(b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362);
    b6 = w * 0.115926;
  }
  normalise_rms(out, kToyRms);
  return out;
}

SourcePool make_toy_pool(std::uint64_t seed, Index speakers, double seconds_per_source) {
  check_config(speakers >= 1 && seconds_per_source > 0, "toy pool needs speakers and duration");
  const Index samples = static_cast<Index>(seconds_per_source * 16000.0);
  SourcePool pool;
  for (Index s = 0; s < speakers; ++s) {
    // Alternate low and high voices.
    const bool low = s % 2 == 0;
    pool.clean.push_back(synth_voice(splitmix64(seed + 17 * static_cast<std::uint64_t>(s)),
                                     low ? 100.0 : 170.0, low ? 150.0 : 260.0, samples));
  }
  pool.noise.push_back(white_noise(splitmix64(seed ^ 0x77686974ull), samples));
  pool.noise.push_back(pink_noise(splitmix64(seed ^ 0x70696e6bull), samples));
  return pool;
}

SourcePool load_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  const auto base = manifest.parent_path();
  SourcePool pool;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string clean, noise, extra;
    if (!(ls >> clean)) continue;
    if (!(ls >> noise) || (ls >> extra))
      throw IoError("manifest line " + std::to_string(line_no) + " must hold two paths");
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() ? path : base / path;
    };
    pool.clean.push_back(dsp::read_wav(resolve(clean)).samples);
    pool.noise.push_back(dsp::read_wav(resolve(noise)).samples);
  }
  if (pool.clean.empty()) throw IoError("manifest " + manifest.string() + " lists no pairs");
  return pool;
}

MixtureSampler::MixtureSampler(SourcePool pool, const SamplerConfig& cfg, std::uint64_t seed)
    : pool_(std::move(pool)), config_(cfg), seed_(seed) {
  check_config(cfg.batch >= 1 && cfg.segment >= 1, "batch and segment must be positive");
  check_config(cfg.snr_low <= cfg.snr_high, "SNR range must satisfy low <= high");
  check_config(!pool_.clean.empty() && !pool_.noise.empty(), "sampler needs clean and noise sources");
  for (const auto& c : pool_.clean)
    check_config(static_cast<Index>(c.size()) >= cfg.segment,
                 "a clean source is shorter than the training segment");
}

std::uint64_t MixtureSampler::batch_seed(std::uint64_t seed, Index step) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(step)));
}

Batch MixtureSampler::batch(Index step) const {
  Batch b;
  b.seed = batch_seed(seed_, step);
  std::mt19937_64 rng(b.seed);
  const Index n = config_.segment;
  b.noisy = Tensor({config_.batch, n});
  b.clean = Tensor({config_.batch, n});
  std::uniform_real_distribution<double> snr_dist(config_.snr_low, config_.snr_high);
  for (Index i = 0; i < config_.batch; ++i) {
    // Silent clean crops are redrawn rather than mixed.
    std::span<const Real> clean;
    for (int attempt = 0;; ++attempt) {
      const auto& src = pool_.clean[rng() % pool_.clean.size()];
      const auto offset = rng() % (src.size() - static_cast<std::size_t>(n) + 1);
      clean = std::span<const Real>(src).subspan(offset, static_cast<std::size_t>(n));
      if (mean_power(clean) > kSilencePower) break;
      if (attempt >= kMaxResamples) throw NumericError("could not find a non-silent clean segment");
    }
    const auto& noise_src = pool_.noise[rng() % pool_.noise.size()];
    const std::size_t noise_len = std::min(noise_src.size(), static_cast<std::size_t>(n));
    const auto noise_off = rng() % (noise_src.size() - noise_len + 1);
    const double snr = snr_dist(rng);
    Mixture m = mix_at_snr(clean, std::span<const Real>(noise_src).subspan(noise_off, noise_len), snr);
    std::copy(m.mixture.begin(), m.mixture.end(), b.noisy.data() + i * n);
    std::copy(m.clean.begin(), m.clean.end(), b.clean.data() + i * n);
    b.snr_db.push_back(snr);
  }
  return b;
}

HeldOutSet make_toy_heldout(std::uint64_t seed, Index count, Index segment,
                            const std::vector<double>& snrs) {
  check_config(!snrs.empty() && count >= 1, "held-out set needs SNRs and a positive count");
  const double seconds = std::max(2.0, static_cast<double>(segment) / 16000.0 * 2.0);
  SourcePool pool = make_toy_pool(splitmix64(seed ^ 0x68656c64ull), 2, seconds);
  std::mt19937_64 rng(seed);
  HeldOutSet set;
  for (Index i = 0; i < count; ++i) {
    const auto& src = pool.clean[static_cast<std::size_t>(i) % pool.clean.size()];
    std::span<const Real> clean;
    for (int attempt = 0;; ++attempt) {
      const auto offset = rng() % (src.size() - static_cast<std::size_t>(segment) + 1);
      clean = std::span<const Real>(src).subspan(offset, static_cast<std::size_t>(segment));
      if (mean_power(clean) > kSilencePower) break;
      if (attempt >= kMaxResamples) throw NumericError("could not find a non-silent clean segment");
    }
    const auto& noise = pool.noise[static_cast<std::size_t>(i / 2) % pool.noise.size()];
    const auto noise_off = rng() % (noise.size() - static_cast<std::size_t>(segment) + 1);
    const double snr = snrs[static_cast<std::size_t>(i) % snrs.size()];
    set.items.push_back(mix_at_snr(
        clean, std::span<const Real>(noise).subspan(noise_off, static_cast<std::size_t>(segment)), snr));
    set.snr_db.push_back(snr);
  }
  return set;
}

}  // namespace training
}  // namespace LCT_PRECISION_NS
}  // namespace lct
