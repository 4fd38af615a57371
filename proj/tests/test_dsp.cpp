// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "lct/dsp/fft.hpp"
#include "lct/dsp/stft.hpp"
#include "lct/dsp/wav.hpp"

using namespace lct;
using namespace lct::dsp;

namespace {

std::vector<Real> noise(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<Real> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = static_cast<Real>(g(rng));
  return x;
}

// Direct DFT of one windowed frame, in double.
std::vector<std::complex<double>> direct_dft(const std::vector<double>& frame) {
  const std::size_t n = frame.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k)
    for (std::size_t t = 0; t < n; ++t)
      out[k] += frame[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t % n) / double(n));
  return out;
}

double relative_l2(const std::vector<Real>& a, const std::vector<Real>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    den += double(b[i]) * b[i];
  }
  return std::sqrt(num / den);
}

std::vector<Real> tone(double hz, Index n) {
  std::vector<Real> x(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) x[i] = static_cast<Real>(std::cos(2 * std::numbers::pi * hz * double(i) / 16000.0));
  return x;
}

Index peak_bin(const Spectrogram& s, Index frame) {
  Index best = 0;
  for (Index k = 1; k < s.bins(); ++k)
    if (s.magnitude(frame, k) > s.magnitude(frame, best)) best = k;
  return best;
}

}  // namespace

TEST_SUITE("dsp") {
  TEST_CASE("real FFT matches a direct DFT") {
    const auto x = noise(512, 3);
    RealFft fft(512);
    std::vector<Real> out(2 * 257);
    fft.forward(x.data(), out.data());
    const auto ref = direct_dft(std::vector<double>(x.begin(), x.end()));
    for (std::size_t k = 0; k < ref.size(); ++k) {
      CHECK(out[2 * k] == doctest::Approx(ref[k].real()).epsilon(1e-4).scale(1.0));
      CHECK(out[2 * k + 1] == doctest::Approx(ref[k].imag()).epsilon(1e-4).scale(1.0));
    }
  }

  TEST_CASE("window satisfies constant overlap-add at every loss resolution") {
    for (Index size : {320, 512, 768}) CHECK(cola_deviation(StftConfig::with_size(size)) < 1e-6);
  }

  TEST_CASE("zero input without padding gives 15 zero frames") {
    const std::vector<Real> x(4096, 0.0f);
    const auto s = stft(x, StftConfig::with_size(512, Padding::kNone));
    CHECK(s.frames() == 15);
    CHECK(s.bins() == 257);
    CHECK(s.data.max_abs() == 0.0f);
  }

  TEST_CASE("bin-centred 1 kHz tone peaks at bin 32 and matches the direct DFT") {
    const auto x = tone(1000.0, 4096);
    const auto cfg = StftConfig::with_size(512, Padding::kNone);
    const auto s = stft(x, cfg);
    CHECK(peak_bin(s, 3) == 32);
    const auto w = make_window(cfg);
    std::vector<double> frame(512);
    for (Index t = 0; t < 512; ++t) frame[t] = double(w[t]) * x[3 * 256 + t];
    const auto ref = direct_dft(frame);
    for (Index k = 0; k < 257; ++k) CHECK(s.magnitude(3, k) == doctest::Approx(std::abs(ref[k])).epsilon(1e-3).scale(1.0));
  }

  TEST_CASE("impulse response of the windowed DFT") {
    std::vector<Real> x(1024, 0.0f);
    x[0] = 1.0f;
    const auto cfg = StftConfig::with_size(512, Padding::kNone);
    auto s = stft(x, cfg);
    const auto w = make_window(cfg);
    for (Index k = 0; k < 257; ++k) CHECK(s.magnitude(0, k) == doctest::Approx(std::abs(w[0])));
    std::fill(x.begin(), x.end(), 0.0f);
    x[100] = 1.0f;
    s = stft(x, cfg);
    for (Index k = 0; k < 257; ++k) CHECK(s.magnitude(0, k) == doctest::Approx(w[100]).epsilon(1e-5));
  }

  TEST_CASE("round trip on random signals") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto x = noise(16000, seed);
      const auto y = istft(stft(x, StftConfig{}));
      REQUIRE(y.size() == x.size());
      CHECK(relative_l2(y, x) < 1e-6);
    }
  }

  TEST_CASE("causal framing covers every sample twice") {
    const auto cfg = StftConfig{};
    CHECK(frame_count(16000, cfg) == (16000 + 255) / 256 + 1);
    CHECK(frame_count(512, cfg) == 3);
    CHECK(frame_count(1, cfg) == 2);
    const std::vector<Real> one{0.5f};
    const auto s = stft(one, cfg);
    CHECK(s.frames() == 2);
    const auto y = istft(s);
    REQUIRE(y.size() == 1);
    CHECK(y[0] == doctest::Approx(0.5));
  }

  TEST_CASE("zero spectrogram synthesises silence") {
    Spectrogram s;
    s.config = StftConfig{};
    s.signal_length = 1000;
    s.data = Tensor({frame_count(1000, s.config), 257, 2});
    const auto y = istft(s);
    CHECK(y.size() == 1000);
    for (Real v : y) CHECK(v == 0.0f);
  }

  TEST_CASE("linearity") {
    const auto a = noise(3000, 1), b = noise(3000, 2);
    std::vector<Real> mix(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mix[i] = 2.0f * a[i] - 0.5f * b[i];
    const auto sa = stft(a, StftConfig{}), sb = stft(b, StftConfig{}), sm = stft(mix, StftConfig{});
    for (Index i = 0; i < sm.data.numel(); ++i)
      CHECK(sm.data[i] == doctest::Approx(2.0f * sa.data[i] - 0.5f * sb.data[i]).epsilon(1e-4).scale(1.0));
  }

  TEST_CASE("Parseval with a unit overlap envelope") {
    // Every sample is covered by two frames whose squared windows sum to one,
    // so the two-sided spectral energy is fft_size times the signal energy.
    const auto x = noise(5000, 9);
    const auto s = stft(x, StftConfig{});
    double spectral = 0;
    for (Index l = 0; l < s.frames(); ++l)
      for (Index k = 0; k < s.bins(); ++k) {
        const double m = s.magnitude(l, k);
        spectral += (k == 0 || k == 256 ? 1.0 : 2.0) * m * m;
      }
    double energy = 0;
    for (Real v : x) energy += double(v) * v;
    CHECK(spectral / (512.0 * energy) == doctest::Approx(1.0).epsilon(1e-5));
  }

  TEST_CASE("multi-resolution bins and tone peaks") {
    const auto x = tone(2000.0, 16000);
    const auto specs = multi_res_spectra(x);
    REQUIRE(specs.size() == 3);
    const Index bins[] = {161, 257, 385};
    const Index peaks[] = {40, 64, 96};
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(specs[i].bins() == bins[i]);
      CHECK(specs[i].config.hop * 2 == specs[i].config.fft_size);
      CHECK(peak_bin(specs[i], 10) == peaks[i]);
    }
    const std::vector<Real> zero(16000, 0.0f);
    for (const auto& s : multi_res_spectra(zero)) CHECK(s.data.max_abs() == 0.0f);
  }

  TEST_CASE("errors") {
    const std::vector<Real> shorter(300, 0.1f);
    CHECK_THROWS_AS(stft(shorter, StftConfig::with_size(512, Padding::kNone)), ShapeError);
    CHECK_THROWS_AS(stft(std::vector<Real>{}, StftConfig{}), ShapeError);
    Spectrogram s = stft(noise(2000, 4), StftConfig{});
    s.data = Tensor({s.frames(), 100, 2});
    CHECK_THROWS(istft(s));
    StftConfig bad;
    bad.hop = 128;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("WAV round trip and rejection") {
    const auto dir = std::filesystem::temp_directory_path() / "lct_wav_test";
    std::filesystem::create_directories(dir);
    const auto x = noise(1000, 5);
    write_wav(dir / "f.wav", x, WavFormat::kFloat32);
    const Wave f = read_wav(dir / "f.wav");
    CHECK(f.format == WavFormat::kFloat32);
    REQUIRE(f.samples.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(f.samples[i] == x[i]);

    write_wav(dir / "p.wav", x, WavFormat::kPcm16);
    const Wave p = read_wav(dir / "p.wav");
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(p.samples[i] - std::clamp(x[i], -1.0f, 1.0f)) <= 1.0f / 32768);

    write_wav(dir / "r.wav", x, WavFormat::kPcm16, 8000);
    CHECK_THROWS_AS(read_wav(dir / "r.wav"), IoError);
    {
      std::ofstream junk(dir / "junk.wav", std::ios::binary);
      junk << "not a wave file";
    }
    CHECK_THROWS_AS(read_wav(dir / "junk.wav"), IoError);
    CHECK_THROWS_AS(read_wav(dir / "missing.wav"), IoError);
    std::filesystem::remove_all(dir);
  }
}
