// SPDX-License-Identifier: Apache-2.0
//
// Training targets and loss terms.
//
// Adversarial terms use least squares with a mean over each discriminator's
// score map, summed over discriminators:
//   disc:  sum_d mean((D_d(s) - 1)^2) + mean(D_d(s_hat)^2)
//   gen:   sum_d mean((D_d(s_hat) - 1)^2) + fm_weight * sum_{d,layer} mean|f_real - f_fake|

#pragma once

#include <map>
#include <vector>

#include "lct/dsp/stft.hpp"
#include "lct/ops.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace losses {

struct LossWeights {
  std::map<Index, double> resolution_weights{{320, 1.0}, {512, 2.0}, {768, 1.0}};
  double phase_blend = 0.3;
  double compression = 0.3;
  double gamma = 1e-8;
  double adv_weight = 1e-2;
  double feature_matching_weight = 2.0;

  void validate() const;
};

/// |S|^c / (|X|^c + gamma) per bin. Both spectra (..., 2) with equal shapes.
Tensor compressed_irm(const Tensor& clean_spec, const Tensor& noisy_spec, double compression,
                      double gamma);

/// Sum over resolutions of weight * compressed spectral loss between
/// (B, N) waveforms; differentiable in the estimate.
Var multi_res_loss(const Var& estimate, const Tensor& reference, const LossWeights& w);

/// Score map and per-layer activations of one sub-discriminator.
struct DiscOutput {
  Var score;
  std::vector<Var> features;
};

Var adv_loss_disc(const std::vector<DiscOutput>& real, const std::vector<DiscOutput>& fake);
/// LS term only.
Var adv_loss_gen(const std::vector<DiscOutput>& fake);
/// L1 feature matching; real features are treated as constants.
Var feature_matching(const std::vector<DiscOutput>& real, const std::vector<DiscOutput>& fake);

struct GenLossParts {
  Var total;
  Var multi_res;
  Var adversarial;        // LS + weighted feature matching, empty when not used
  Var feature_matching;   // unweighted, empty when not used
};

/// multi_res + adv_weight * (LS + fm_weight * FM). Discriminator outputs may
/// be empty for generator-only training.
GenLossParts total_gen_loss(const Var& multi_res, const std::vector<DiscOutput>& real,
                            const std::vector<DiscOutput>& fake, const LossWeights& w);

}  // namespace losses
}  // namespace LCT_PRECISION_NS
}  // namespace lct
