// SPDX-License-Identifier: Apache-2.0
//
// Named-tensor archive. Layout:
//
//   LCT-ARCHIVE 1\n
//   kind generator|full-gan\n
//   dtype f32|f64\n
//   config <one-line JSON>\n
//   tensor <name> <dim>x<dim>... <element offset> <element count>\n   (repeated)
//   end\n
//   <little-endian payload, all tensors back to back in the listed order>
//
// Tensors are stored in the writer's precision and converted on load.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lct/model/generator.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace model {

inline constexpr int kArchiveVersion = 1;

enum class ArchiveKind { kGenerator, kFullGan };

struct Archive {
  ArchiveKind kind = ArchiveKind::kGenerator;
  nlohmann::json config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_archive(const std::filesystem::path& path, const Archive& archive);
Archive load_archive(const std::filesystem::path& path);

/// Appends every parameter as "<prefix><name>".
void add_params(Archive& archive, const nn::ParamStore& params, const std::string& prefix);
/// Copies "<prefix><name>" tensors into the store; shapes must match exactly
/// and every parameter must be present.
void restore_params(const Archive& archive, nn::ParamStore& params, const std::string& prefix);

inline const std::string kGeneratorPrefix = "generator/";

/// Generator-only archive with the model config echoed under "model".
void save_generator(const std::filesystem::path& path, const Generator& gen);
/// Rebuilds the generator from the archived config (either archive kind).
Generator load_generator(const std::filesystem::path& path);
Generator generator_from_archive(const Archive& archive);

}  // namespace model
}  // namespace LCT_PRECISION_NS
}  // namespace lct
