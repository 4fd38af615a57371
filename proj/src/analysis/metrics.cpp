// SPDX-License-Identifier: Apache-2.0

#include "lct/analysis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace analysis {

double si_sdr(std::span<const Real> estimate, std::span<const Real> reference) {
  check_shape(estimate.size() == reference.size(),
              "si_sdr: estimate has " + std::to_string(estimate.size()) + " samples, reference " +
                  std::to_string(reference.size()));
  double ref_energy = 0, dot = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += static_cast<double>(reference[i]) * reference[i];
    dot += static_cast<double>(estimate[i]) * reference[i];
  }
  if (!(ref_energy > 0)) throw NumericError("si_sdr: reference signal has zero energy");
  const double alpha = dot / ref_energy;
  double target = 0, error = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    const double e = t - estimate[i];
    target += t * t;
    error += e * e;
  }
  if (!(error > 0)) return kSiSdrCapDb;
  if (!(target > 0)) return -kSiSdrCapDb;
  return std::clamp(10.0 * std::log10(target / error), -kSiSdrCapDb, kSiSdrCapDb);
}

}  // namespace analysis
}  // namespace LCT_PRECISION_NS
}  // namespace lct
