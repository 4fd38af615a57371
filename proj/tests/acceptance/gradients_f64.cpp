// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>
#include <type_traits>

#include "gradients.hpp"
#include "grad_cases.hpp"

namespace lct::acceptance {

GradientSummary check_gradients(int instances, double tolerance) {
  GradientSummary s;
  s.double_precision = std::is_same_v<Real, double>;
  s.instances_per_case = instances;
  for (const auto& c : testing::grad_cases()) {
    ++s.cases;
    if (std::find(s.families.begin(), s.families.end(), c.family) == s.families.end()) s.families.push_back(c.family);
    for (int i = 0; i < instances; ++i) {
      std::mt19937_64 rng(1000 + 17 * static_cast<std::uint64_t>(i));
      const auto r = c.run(rng);
      if (r.rel_error > s.worst_rel_error) {
        s.worst_rel_error = r.rel_error;
        s.worst_case = c.name;
      }
      if (!(r.rel_error < tolerance) || !(r.norm > 0)) {
        s.failures.push_back(c.name + " #" + std::to_string(i));
      }
    }
  }
  return s;
}

}  // namespace lct::acceptance
