// SPDX-License-Identifier: Apache-2.0
//
// Perturbation probe for the end-to-end latency horizon. Each trial draws a
// random input and a cut point n, replaces every sample after n, enhances
// both versions offline and finds the first output sample that differs
// (bitwise). With horizon H = fft + hop * lookahead, outputs at [0, n - H]
// must be identical.

#pragma once

#include <cstdint>

#include "lct/model/generator.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace analysis {

struct CausalityReport {
  Index trials = 0;
  Index horizon = 0;
  /// Trials with a differing output sample at or before n - horizon.
  Index violations = 0;
  /// Largest |difference| over the protected region.
  double max_violation = 0;
  /// Largest n - e over trials, e the first differing output sample;
  /// -1 when no trial produced any difference.
  Index deepest_reach = -1;
};

struct ProbeConfig {
  Index trials = 100;
  Index samples = 16000;
  std::uint64_t seed = 7;
  /// 0 selects the documented horizon of the generator's config.
  Index horizon = 0;
};

CausalityReport causality_probe(const model::Generator& gen, const ProbeConfig& probe = {});

}  // namespace analysis
}  // namespace LCT_PRECISION_NS
}  // namespace lct
