// SPDX-License-Identifier: Apache-2.0

#include "lct/analysis/complexity.hpp"

#include <cstdio>
#include <sstream>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace analysis {
namespace {

Index gru_params(Index features, Index hidden, Index groups) {
  return nn::GroupedGruSpec{features, hidden, groups}.param_count();
}

double gru_macs_per_step(Index features, Index hidden, Index groups) {
  const Index fg = features / groups, hg = hidden / groups;
  return static_cast<double>(groups * 3 * (fg * hg + hg * hg));
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Index transformer_params(const model::ModelConfig& cfg) {
  const Index d = cfg.bottleneck_width();
  return gru_params(d, d, cfg.gru_groups) + 2 * (2 * d) + 4 * (d * d + d);
}

double transformer_macs_per_frame(const model::ModelConfig& cfg, char axis, bool first_time_block) {
  const Index d = cfg.bottleneck_width();
  const auto positions = static_cast<double>(cfg.bottleneck_bins());
  double keys = 0;
  if (axis == 'T')
    keys = static_cast<double>(cfg.time_mask_enabled
                                   ? cfg.context_frames + (first_time_block ? cfg.lookahead : 0)
                                   : cfg.context_frames);
  else
    keys = positions;
  const double gru = gru_macs_per_step(d, d, cfg.gru_groups);
  const double projections = 4.0 * static_cast<double>(d * d);
  const double attention = 2.0 * static_cast<double>(d) * keys;
  return positions * (gru + projections + attention);
}

Index count_params(const model::ModelConfig& cfg) {
  cfg.validate();
  return analyse(cfg).params_total;
}

Index stored_params(const model::Generator& gen) { return gen.params().total_elements(); }

ComplexityReport analyse(const model::ModelConfig& cfg, double seconds) {
  cfg.validate();
  check_config(seconds > 0, "duration must be positive");
  ComplexityReport r;
  r.bottleneck = cfg.bottleneck;
  r.lookahead = cfg.lookahead;
  r.seconds = seconds;
  r.latency_ms = cfg.latency_ms();
  r.context_window_frames = cfg.context_frames + cfg.lookahead;

  const auto ladder = cfg.freq_ladder();
  const Index kernel = cfg.kernel_time * cfg.kernel_freq;
  const std::size_t layers = cfg.encoder_channels.size();
  Index in = 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const Index out = cfg.encoder_channels[i];
    r.params_by_module["encoder"] += out * in * kernel + out;
    r.macs_by_module["encoder"] += static_cast<double>(out * ladder[i + 1] * kernel * in);
    r.params_by_module["skip"] += out * out + out;
    r.macs_by_module["skip"] += static_cast<double>(out * ladder[i + 1] * out);
    in = out;
  }
  const Index first_t = cfg.first_time_block();
  for (std::size_t b = 0; b < cfg.bottleneck.size(); ++b) {
    r.params_by_module["bottleneck"] += transformer_params(cfg);
    r.macs_by_module["bottleneck"] +=
        transformer_macs_per_frame(cfg, cfg.bottleneck[b], static_cast<Index>(b) == first_t);
  }
  Index prev = cfg.bottleneck_width();
  for (std::size_t i = 0; i < layers; ++i) {
    const Index cin = prev + cfg.encoder_channels[layers - 1 - i];
    const Index out = cfg.decoder_channels[i];
    r.params_by_module["decoder"] += cin * out * kernel + out;
    r.macs_by_module["decoder"] += static_cast<double>(cin * ladder[layers - i] * kernel * out);
    prev = out;
  }
  for (const auto& [name, n] : r.params_by_module) r.params_total += n;
  for (const auto& [name, m] : r.macs_by_module) r.macs_per_frame += m;
  r.macs_per_second = r.macs_per_frame * cfg.frames_per_second();
  r.macs_total = r.macs_per_second * seconds;
  return r;
}

double count_macs(const model::ModelConfig& cfg, double seconds) { return analyse(cfg, seconds).macs_total; }

std::string ComplexityReport::to_text() const {
  std::ostringstream os;
  os << "bottleneck        " << bottleneck << "\n";
  os << "lookahead         " << lookahead << " frame(s)\n";
  os << "parameters        " << params_total << " (" << fixed(params_total / 1e6, 3) << " M)\n";
  for (const auto& [name, n] : params_by_module) os << "  " << name << std::string(16 - name.size(), ' ') << n << "\n";
  os << "MACs per frame    " << fixed(macs_per_frame, 0) << "\n";
  for (const auto& [name, m] : macs_by_module)
    os << "  " << name << std::string(16 - name.size(), ' ') << fixed(m, 0) << "\n";
  os << "MAC/s             " << fixed(macs_per_second / 1e9, 4) << " G\n";
  os << "latency           " << fixed(latency_ms, 1) << " ms\n";
  os << "context window    " << context_window_frames << " frames\n";
  return os.str();
}

std::string ComplexityReport::to_key_values() const {
  std::ostringstream os;
  os << "bottleneck=" << bottleneck << "\n";
  os << "lookahead=" << lookahead << "\n";
  os << "params_total=" << params_total << "\n";
  for (const auto& [name, n] : params_by_module) os << "params." << name << "=" << n << "\n";
  os << "macs_per_frame=" << fixed(macs_per_frame, 0) << "\n";
  for (const auto& [name, m] : macs_by_module) os << "macs_per_frame." << name << "=" << fixed(m, 0) << "\n";
  os << "macs_per_second=" << fixed(macs_per_second, 0) << "\n";
  os << "seconds=" << seconds << "\n";
  os << "macs_total=" << fixed(macs_total, 0) << "\n";
  os << "latency_ms=" << fixed(latency_ms, 3) << "\n";
  os << "context_window_frames=" << context_window_frames << "\n";
  return os.str();
}

Index cruse_params(const model::ModelConfig& cfg, const CruseReference& ref) {
  const Index features = cfg.bottleneck_width() * cfg.bottleneck_bins();
  check_config(ref.layers >= 1 && features % ref.groups == 0,
               "reference GRU groups must divide the flattened feature size");
  return ref.layers * gru_params(features, features, ref.groups);
}

double cruse_macs_per_frame(const model::ModelConfig& cfg, const CruseReference& ref) {
  const Index features = cfg.bottleneck_width() * cfg.bottleneck_bins();
  check_config(ref.layers >= 1 && features % ref.groups == 0,
               "reference GRU groups must divide the flattened feature size");
  return static_cast<double>(ref.layers) * gru_macs_per_step(features, features, ref.groups);
}

CruseComparison cruse_comparison(const model::ModelConfig& cfg, const CruseReference& ref) {
  const ComplexityReport r = analyse(cfg);
  CruseComparison c;
  c.lct_params = r.params_by_module.at("bottleneck");
  c.lct_macs_per_frame = r.macs_by_module.at("bottleneck");
  c.reference_params = cruse_params(cfg, ref);
  c.reference_macs_per_frame = cruse_macs_per_frame(cfg, ref);
  c.param_reduction = 1.0 - static_cast<double>(c.lct_params) / static_cast<double>(c.reference_params);
  c.mac_reduction = 1.0 - c.lct_macs_per_frame / c.reference_macs_per_frame;
  return c;
}

std::string CruseComparison::to_text() const {
  std::ostringstream os;
  os << "bottleneck params   transformer " << lct_params << "  flattened GRU " << reference_params
     << "  reduction " << fixed(100.0 * param_reduction, 1) << " %\n";
  os << "bottleneck MACs/fr  transformer " << fixed(lct_macs_per_frame, 0) << "  flattened GRU "
     << fixed(reference_macs_per_frame, 0) << "  reduction " << fixed(100.0 * mac_reduction, 1)
     << " %\n";
  return os.str();
}

std::vector<GridRow> ablation_grid(const model::ModelConfig& base) {
  std::vector<GridRow> rows;
  for (const auto& variant : model::kAblationBottlenecks) {
    model::ModelConfig cfg = base;
    cfg.bottleneck = variant;
    const ComplexityReport r = analyse(cfg);
    rows.push_back({variant, r.params_total, r.macs_per_second, r.latency_ms});
  }
  return rows;
}

std::string grid_csv(const std::vector<GridRow>& rows) {
  std::ostringstream os;
  os << "variant,params,macs_per_second,latency_ms\n";
  for (const auto& r : rows)
    os << r.variant << ',' << r.params << ',' << fixed(r.macs_per_second, 0) << ','
       << fixed(r.latency_ms, 1) << "\n";
  return os.str();
}

}  // namespace analysis
}  // namespace LCT_PRECISION_NS
}  // namespace lct
