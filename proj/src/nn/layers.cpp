// SPDX-License-Identifier: Apache-2.0

#include "lct/nn/layers.hpp"

#include <cmath>
#include <cstring>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace nn {

Var ParamStore::add(const std::string& name, Tensor value) {
  check_config(find(name) == nullptr, "duplicate parameter name " + name);
  Var v = parameter(std::move(value));
  entries_.emplace_back(name, v);
  return v;
}

const Var* ParamStore::find(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return &v;
  return nullptr;
}

Index ParamStore::total_elements() const {
  Index total = 0;
  for (const auto& entry : entries_) total += entry.second.value().numel();
  return total;
}

Index ParamStore::elements_with_prefix(const std::string& prefix) const {
  Index total = 0;
  for (const auto& [n, v] : entries_)
    if (n.compare(0, prefix.size(), prefix) == 0) total += v.value().numel();
  return total;
}

void ParamStore::zero_grad() {
  for (auto& entry : entries_) entry.second.zero_grad();
}

std::uint64_t ParamStore::checksum() const {
  // FNV-1a over the raw bytes.
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& entry : entries_) {
    const Tensor& t = entry.second.value();
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(t.numel()) * sizeof(Real); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

Tensor uniform_init(Shape shape, Index fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (Real& v : t.values()) v = static_cast<Real>(dist(rng));
  return t;
}

Conv2d::Conv2d(ParamStore& store, const std::string& name, Index in_channels,
               Index out_channels, const kernels::ConvGeometry& g, std::mt19937_64& rng)
    : geometry(g) {
  check_config(in_channels % g.groups == 0 && out_channels % g.groups == 0,
               name + ": groups must divide both channel counts");
  const Index fan_in = in_channels / g.groups * g.kernel_h * g.kernel_w;
  weight = store.add(name + ".weight",
                     uniform_init({out_channels, in_channels / g.groups, g.kernel_h, g.kernel_w},
                                  fan_in, rng));
  bias = store.add(name + ".bias", uniform_init({out_channels}, fan_in, rng));
}

ConvTranspose2d::ConvTranspose2d(ParamStore& store, const std::string& name, Index in_channels,
                                 Index out_channels, const kernels::ConvGeometry& g,
                                 std::mt19937_64& rng)
    : geometry(g) {
  check_config(g.groups == 1, name + ": grouped transposed convolution is not supported");
  // PyTorch computes fan_in from weight.size(1) for transposed convs.
  const Index fan_in = out_channels * g.kernel_h * g.kernel_w;
  weight = store.add(name + ".weight",
                     uniform_init({in_channels, out_channels, g.kernel_h, g.kernel_w}, fan_in, rng));
  bias = store.add(name + ".bias", uniform_init({out_channels}, fan_in, rng));
}

Linear::Linear(ParamStore& store, const std::string& name, Index in_features,
               Index out_features, std::mt19937_64& rng) {
  weight = store.add(name + ".weight", uniform_init({out_features, in_features}, in_features, rng));
  bias = store.add(name + ".bias", uniform_init({out_features}, in_features, rng));
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, Index width) {
  gain = store.add(name + ".gain", Tensor({width}, Real{1}));
  bias = store.add(name + ".bias", Tensor({width}, Real{0}));
}

void GroupedGruSpec::validate() const {
  check_config(groups >= 1, "GRU groups must be positive");
  check_config(feature_size % groups == 0 && hidden_size % groups == 0,
               "GRU groups (" + std::to_string(groups) + ") must divide feature size " +
                   std::to_string(feature_size) + " and hidden size " +
                   std::to_string(hidden_size));
}

Index GroupedGruSpec::param_count() const {
  const Index fg = feature_size / groups, hg = hidden_size / groups;
  return groups * 3 * (fg * hg + hg * hg + hg);
}

GroupedGru::GroupedGru(ParamStore& store, const std::string& name, const GroupedGruSpec& s,
                       std::mt19937_64& rng)
    : spec(s) {
  spec.validate();
  const Index g = spec.groups, fg = spec.feature_size / g, hg = spec.hidden_size / g;
  w_ih = store.add(name + ".w_ih", uniform_init({g, 3 * hg, fg}, hg, rng));
  w_hh = store.add(name + ".w_hh", uniform_init({g, 3 * hg, hg}, hg, rng));
  bias = store.add(name + ".bias", uniform_init({g, 3 * hg}, hg, rng));
}

MultiHeadAttention::MultiHeadAttention(ParamStore& store, const std::string& name, Index width,
                                       Index h, std::mt19937_64& rng)
    : heads(h) {
  check_config(heads >= 1 && width % heads == 0,
               "attention heads (" + std::to_string(heads) + ") must divide width " +
                   std::to_string(width));
  query = Linear(store, name + ".query", width, width, rng);
  key = Linear(store, name + ".key", width, width, rng);
  value = Linear(store, name + ".value", width, width, rng);
  output = Linear(store, name + ".output", width, width, rng);
}

Var MultiHeadAttention::operator()(const Var& x, const kernels::TrapezoidMask& mask) const {
  Var mixed = ops::attention(query(x), key(x), value(x), heads, mask);
  return output(mixed);
}

}  // namespace nn
}  // namespace LCT_PRECISION_NS
}  // namespace lct
