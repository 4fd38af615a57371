// SPDX-License-Identifier: Apache-2.0
//
// Analytic footprint and compute accounting.
//
// MAC convention (one multiply-accumulate = 1 MAC; biases, activations and
// normalisations are not counted):
//   conv             output elements * kernel area * input channels per group
//   transposed conv  input elements * kernel area * output channels
//   grouped GRU      3 * (f*h + h*h) / groups per position per step
//   attention        4 * D^2 per position for the q/k/v/o projections, plus
//                    2 * D per attended key per query row. Time rows attend
//                    the steady-state window (context + lookahead) frames;
//                    frequency rows attend every bin of the frame.
// All terms are per frame, so MACs scale exactly with the number of frames;
// one second of audio counts sample_rate / hop = 62.5 frames.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "lct/model/generator.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace analysis {

struct ComplexityReport {
  std::string bottleneck;
  Index lookahead = 0;
  Index params_total = 0;
  std::map<std::string, Index> params_by_module;
  double macs_per_frame = 0;
  std::map<std::string, double> macs_by_module;  // per frame
  double seconds = 1.0;
  double macs_total = 0;        // for `seconds` of audio
  double macs_per_second = 0;
  double latency_ms = 0;
  Index context_window_frames = 0;

  std::string to_text() const;
  /// key=value lines.
  std::string to_key_values() const;
};

ComplexityReport analyse(const model::ModelConfig& cfg, double seconds = 1.0);

/// Analytic count for a config; equals the stored element count of a built generator.
Index count_params(const model::ModelConfig& cfg);
/// Stored element count of a built generator.
Index stored_params(const model::Generator& gen);
double count_macs(const model::ModelConfig& cfg, double seconds = 1.0);

/// Parameters and per-frame MACs of one transformer block.
Index transformer_params(const model::ModelConfig& cfg);
double transformer_macs_per_frame(const model::ModelConfig& cfg, char axis, bool first_time_block);

/// Conventional recurrent bottleneck: the bins are flattened into the feature
/// axis (channels * bins features) and fed to `layers` stacked grouped GRUs
/// with hidden size equal to the feature size.
struct CruseReference {
  Index layers = 2;
  Index groups = 16;
};

struct CruseComparison {
  Index lct_params = 0;
  Index reference_params = 0;
  double lct_macs_per_frame = 0;
  double reference_macs_per_frame = 0;
  double param_reduction = 0;  // 1 - lct / reference
  double mac_reduction = 0;

  std::string to_text() const;
};

Index cruse_params(const model::ModelConfig& cfg, const CruseReference& ref = {});
double cruse_macs_per_frame(const model::ModelConfig& cfg, const CruseReference& ref = {});
CruseComparison cruse_comparison(const model::ModelConfig& cfg, const CruseReference& ref = {});

struct GridRow {
  std::string variant;
  Index params = 0;
  double macs_per_second = 0;
  double latency_ms = 0;
};

/// The eight bottleneck strings of the ablation on top of `base`.
std::vector<GridRow> ablation_grid(const model::ModelConfig& base);
/// Comma-separated table with a header line.
std::string grid_csv(const std::vector<GridRow>& rows);

}  // namespace analysis
}  // namespace LCT_PRECISION_NS
}  // namespace lct
