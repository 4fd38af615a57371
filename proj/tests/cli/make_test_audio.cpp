// SPDX-License-Identifier: Apache-2.0
//
// Writes the small WAV fixtures the command-line tests run on.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>

#include "lct/dsp/wav.hpp"

using namespace lct;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_test_audio DIR\n";
    return 1;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir / "clean");
  fs::create_directories(dir / "noisy");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<Real> clean(16000), noisy(16000);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    clean[i] = static_cast<Real>(0.3 * std::sin(2 * M_PI * 220.0 * double(i) / 16000.0));
    noisy[i] = clean[i] + static_cast<Real>(g(rng));
  }
  dsp::write_wav(dir / "tone.wav", clean);
  dsp::write_wav(dir / "noisy.wav", noisy, dsp::WavFormat::kFloat32);
  dsp::write_wav(dir / "silence.wav", std::vector<Real>(8000, 0.0f));
  dsp::write_wav(dir / "rate8k.wav", clean, dsp::WavFormat::kPcm16, 8000);
  dsp::write_wav(dir / "clean" / "a.wav", clean);
  dsp::write_wav(dir / "noisy" / "a.wav", clean);
  return 0;
}
