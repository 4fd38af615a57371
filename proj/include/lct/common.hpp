// SPDX-License-Identifier: Apache-2.0
//
// Scalar type selection and the error hierarchy shared by every module.
//
// The library is compiled twice: `lct` in 32-bit production precision and
// `lct_f64` with LCT_USE_DOUBLE for gradient checking. Each build lives in
// its own inline namespace so both may be linked into one binary.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#if defined(LCT_USE_DOUBLE)
#define LCT_PRECISION_NS f64
#else
#define LCT_PRECISION_NS f32
#endif

namespace lct {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes or sizes that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (bottleneck string, flag combination, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File or format problems: WAV, checkpoint, manifest.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

inline void check_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

inline void check_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline namespace LCT_PRECISION_NS {

#if defined(LCT_USE_DOUBLE)
using Real = double;
#else
using Real = float;
#endif

using Index = std::int64_t;

}  // namespace LCT_PRECISION_NS
}  // namespace lct
