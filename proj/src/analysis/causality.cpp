// SPDX-License-Identifier: Apache-2.0

#include "lct/analysis/causality.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lct/model/enhance.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace analysis {

CausalityReport causality_probe(const model::Generator& gen, const ProbeConfig& probe) {
  const model::ModelConfig& cfg = gen.config();
  CausalityReport r;
  r.trials = probe.trials;
  r.horizon = probe.horizon > 0 ? probe.horizon : cfg.fft_size + cfg.hop * cfg.lookahead;
  check_config(probe.samples > r.horizon + 1, "probe input shorter than the horizon");

  std::mt19937_64 rng(probe.seed);
  std::normal_distribution<double> gauss(0.0, 0.1);
  std::uniform_int_distribution<Index> cut(r.horizon, probe.samples - 2);
  std::vector<Real> a(static_cast<std::size_t>(probe.samples));
  for (Index t = 0; t < probe.trials; ++t) {
    for (auto& v : a) v = static_cast<Real>(gauss(rng));
    const Index n = cut(rng);
    std::vector<Real> b = a;
    for (std::size_t i = static_cast<std::size_t>(n) + 1; i < b.size(); ++i)
      b[i] = static_cast<Real>(gauss(rng));
    const auto ya = model::enhance_offline(gen, a, cfg.sample_rate);
    const auto yb = model::enhance_offline(gen, b, cfg.sample_rate);

    Index first = -1;
    for (std::size_t i = 0; i < ya.size(); ++i)
      if (ya[i] != yb[i]) {
        first = static_cast<Index>(i);
        break;
      }
    if (first < 0) continue;
    r.deepest_reach = std::max(r.deepest_reach, n - first);
    if (first <= n - r.horizon) {
      ++r.violations;
      for (Index i = first; i <= n - r.horizon; ++i)
        r.max_violation = std::max(r.max_violation,
                                   std::abs(static_cast<double>(ya[i]) - static_cast<double>(yb[i])));
    }
  }
  return r;
}

}  // namespace analysis
}  // namespace LCT_PRECISION_NS
}  // namespace lct
