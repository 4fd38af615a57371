// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "lct/model/enhance.hpp"
#include "lct/model/stream.hpp"

using namespace lct;
using model::ModelConfig;

namespace {

std::vector<Real> noise(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<Real> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = static_cast<Real>(g(rng));
  return x;
}

double max_diff(const std::vector<Real>& a, const std::vector<Real>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("stream") {
  TEST_CASE("streaming matches offline enhancement") {
    for (Index la : {0, 1}) {
      for (const char* variant : {"FTF", "TFTF"}) {
        CAPTURE(la);
        CAPTURE(variant);
        ModelConfig cfg;
        cfg.lookahead = la;
        cfg.bottleneck = variant;
        model::Generator gen(cfg, 11);
        const auto x = noise(16000, 3);
        const auto off = model::enhance_offline(gen, x);
        const auto str = model::enhance_streaming(gen, x);
        CHECK(max_diff(off, str) < 1e-5);
      }
    }
  }

  TEST_CASE("lengths that are not a hop multiple") {
    model::Generator gen(ModelConfig{}, 12);
    for (Index n : {1, 255, 257, 1000}) {
      const auto x = noise(n, 4);
      CHECK(max_diff(model::enhance_offline(gen, x), model::enhance_streaming(gen, x)) < 1e-5);
    }
  }

  TEST_CASE("output is delayed by the pipeline delay") {
    for (Index la : {0, 1}) {
      ModelConfig cfg;
      cfg.lookahead = la;
      model::Generator gen(cfg);
      model::StreamEnhancer s(gen);
      CHECK(s.delay_samples() == 256 + 256 * la);
      const std::vector<Real> chunk(256, 0.05f);
      Index silent = 0;
      bool seen = false;
      for (int i = 0; i < 6 && !seen; ++i) {
        for (Real v : s.push(chunk)) {
          if (v != 0.0f) {
            seen = true;
            break;
          }
          ++silent;
        }
      }
      CHECK(seen);
      CHECK(silent >= s.delay_samples() - 256);
      CHECK(silent <= s.delay_samples());
    }
  }

  TEST_CASE("state memory does not grow with stream length") {
    model::Generator gen(ModelConfig{});
    model::StreamEnhancer s(gen);
    const std::size_t start = s.memory_bytes();
    const auto x = noise(256, 5);
    for (int i = 0; i < 63; ++i) s.push(x);
    const std::size_t one_second = s.memory_bytes();
    for (int i = 0; i < 63 * 59; ++i) s.push(x);
    CHECK(s.memory_bytes() == one_second);
    CHECK(start == one_second);
  }

  TEST_CASE("reset restarts the stream") {
    model::Generator gen(ModelConfig{});
    model::StreamEnhancer s(gen);
    const auto x = noise(256 * 4, 6);
    std::vector<std::vector<Real>> first, second;
    for (int i = 0; i < 4; ++i) first.push_back(s.push({x.data() + 256 * i, 256}));
    s.reset();
    for (int i = 0; i < 4; ++i) second.push_back(s.push({x.data() + 256 * i, 256}));
    for (int i = 0; i < 4; ++i) CHECK(first[i] == second[i]);
  }

  TEST_CASE("chunk size must equal the hop") {
    model::Generator gen(ModelConfig{});
    model::StreamEnhancer s(gen);
    CHECK_THROWS_AS(s.push(std::vector<Real>(255, 0.0f)), ShapeError);
    CHECK_THROWS_AS(s.push(std::vector<Real>(512, 0.0f)), ShapeError);
  }

  TEST_CASE("streaming needs the time mask") {
    ModelConfig cfg;
    cfg.time_mask_enabled = false;
    model::Generator gen(cfg);
    CHECK_THROWS_AS(model::StreamEnhancer{gen}, ConfigError);
  }
}
