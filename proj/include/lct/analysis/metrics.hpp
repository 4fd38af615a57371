// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "lct/common.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace analysis {

/// Reported in place of +inf when the estimate is an exact scaled copy.
inline constexpr double kSiSdrCapDb = 100.0;

/// 10 log10(|a s|^2 / |a s - s_hat|^2) with a = <s_hat, s> / |s|^2, clipped
/// to [-kSiSdrCapDb, kSiSdrCapDb]. Throws for a zero reference or length mismatch.
double si_sdr(std::span<const Real> estimate, std::span<const Real> reference);

}  // namespace analysis
}  // namespace LCT_PRECISION_NS
}  // namespace lct
