// SPDX-License-Identifier: Apache-2.0

#include "lct/losses.hpp"

#include <cmath>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace losses {

void LossWeights::validate() const {
  check_config(!resolution_weights.empty(), "at least one loss resolution is required");
  for (const auto& [size, weight] : resolution_weights) {
    check_config(weight >= 0, "resolution weights must be non-negative");
    check_config(size >= 4 && size % 2 == 0, "resolution sizes must be even");
  }
  check_config(phase_blend >= 0 && phase_blend <= 1, "phase blend must lie in [0, 1]");
  check_config(compression > 0 && compression <= 1, "compression must lie in (0, 1]");
  check_config(gamma >= 0 && adv_weight >= 0 && feature_matching_weight >= 0,
               "loss weights must be non-negative");
}

Tensor compressed_irm(const Tensor& clean_spec, const Tensor& noisy_spec, double compression,
                      double gamma) {
  check_shape(clean_spec.same_shape(noisy_spec) && clean_spec.shape().back() == 2,
              "compressed_irm: spectra differ " + shape_str(clean_spec.shape()) + " vs " +
                  shape_str(noisy_spec.shape()));
  Shape shape = clean_spec.shape();
  shape.pop_back();
  Tensor out(shape);
  for (Index i = 0; i < out.numel(); ++i) {
    const double s = std::hypot(static_cast<double>(clean_spec[2 * i]), static_cast<double>(clean_spec[2 * i + 1]));
    const double x = std::hypot(static_cast<double>(noisy_spec[2 * i]), static_cast<double>(noisy_spec[2 * i + 1]));
    const double den = std::pow(x, compression) + gamma;
    const double num = std::pow(s, compression);
    out[i] = static_cast<Real>(den > 0 ? num / den : (num > 0 ? INFINITY : 0.0));
  }
  return out;
}

Var multi_res_loss(const Var& estimate, const Tensor& reference, const LossWeights& w) {
  check_shape(estimate.shape() == reference.shape() && reference.rank() == 2,
              "multi_res_loss: estimate " + shape_str(estimate.shape()) + " and reference " +
                  shape_str(reference.shape()) + " must both be (batch, samples)");
  Var total;
  for (const auto& [size, weight] : w.resolution_weights) {
    const dsp::StftConfig cfg = dsp::StftConfig::with_size(size);
    Var term = ops::compressed_spectral_loss(ops::stft(estimate, cfg), dsp::stft_batch(reference, cfg),
                                             static_cast<Real>(w.compression),
                                             static_cast<Real>(w.phase_blend));
    term = ops::scale(term, static_cast<Real>(weight));
    total = total ? ops::add(total, term) : term;
  }
  return total;
}

Var adv_loss_disc(const std::vector<DiscOutput>& real, const std::vector<DiscOutput>& fake) {
  check_shape(real.size() == fake.size() && !real.empty(),
              "adv_loss_disc needs matching, non-empty discriminator outputs");
  Var total;
  for (std::size_t d = 0; d < real.size(); ++d) {
    Var term = ops::add(ops::mse_to(real[d].score, Real{1}), ops::mse_to(fake[d].score, Real{0}));
    total = total ? ops::add(total, term) : term;
  }
  return total;
}

Var adv_loss_gen(const std::vector<DiscOutput>& fake) {
  check_shape(!fake.empty(), "adv_loss_gen needs discriminator outputs");
  Var total;
  for (const auto& out : fake) {
    Var term = ops::mse_to(out.score, Real{1});
    total = total ? ops::add(total, term) : term;
  }
  return total;
}

Var feature_matching(const std::vector<DiscOutput>& real, const std::vector<DiscOutput>& fake) {
  check_shape(real.size() == fake.size() && !real.empty(),
              "feature_matching needs matching discriminator outputs");
  Var total;
  for (std::size_t d = 0; d < real.size(); ++d) {
    check_shape(real[d].features.size() == fake[d].features.size(),
                "feature_matching: layer counts differ");
    for (std::size_t l = 0; l < real[d].features.size(); ++l) {
      Var term = ops::mean_abs_diff(fake[d].features[l], real[d].features[l].detach());
      total = total ? ops::add(total, term) : term;
    }
  }
  return total;
}

GenLossParts total_gen_loss(const Var& multi_res, const std::vector<DiscOutput>& real,
                            const std::vector<DiscOutput>& fake, const LossWeights& w) {
  GenLossParts parts;
  parts.multi_res = multi_res;
  parts.total = multi_res;
  if (fake.empty()) return parts;
  parts.feature_matching = feature_matching(real, fake);
  parts.adversarial = ops::add(adv_loss_gen(fake),
                               ops::scale(parts.feature_matching,
                                          static_cast<Real>(w.feature_matching_weight)));
  parts.total = ops::add(multi_res, ops::scale(parts.adversarial, static_cast<Real>(w.adv_weight)));
  return parts;
}

}  // namespace losses
}  // namespace LCT_PRECISION_NS
}  // namespace lct
