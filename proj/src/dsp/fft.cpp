// SPDX-License-Identifier: Apache-2.0

#include "lct/dsp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace dsp {
namespace {

#if defined(LCT_USE_DOUBLE)
using FftwComplex = fftw_complex;
using FftwPlan = fftw_plan;
FftwPlan plan_r2c(int n, Real* in, FftwComplex* out, unsigned flags) {
  return fftw_plan_dft_r2c_1d(n, in, out, flags);
}
FftwPlan plan_c2r(int n, FftwComplex* in, Real* out, unsigned flags) {
  return fftw_plan_dft_c2r_1d(n, in, out, flags);
}
void exec_r2c(FftwPlan p, Real* in, FftwComplex* out) { fftw_execute_dft_r2c(p, in, out); }
void exec_c2r(FftwPlan p, FftwComplex* in, Real* out) { fftw_execute_dft_c2r(p, in, out); }
#else
using FftwComplex = fftwf_complex;
using FftwPlan = fftwf_plan;
FftwPlan plan_r2c(int n, Real* in, FftwComplex* out, unsigned flags) {
  return fftwf_plan_dft_r2c_1d(n, in, out, flags);
}
FftwPlan plan_c2r(int n, FftwComplex* in, Real* out, unsigned flags) {
  return fftwf_plan_dft_c2r_1d(n, in, out, flags);
}
void exec_r2c(FftwPlan p, Real* in, FftwComplex* out) { fftwf_execute_dft_r2c(p, in, out); }
void exec_c2r(FftwPlan p, FftwComplex* in, Real* out) { fftwf_execute_dft_c2r(p, in, out); }
#endif

// FFTW planning is not thread-safe; plans live for the whole process.
std::mutex g_plan_mutex;
std::map<Index, std::pair<FftwPlan, FftwPlan>>& plan_cache() {
  static std::map<Index, std::pair<FftwPlan, FftwPlan>> cache;
  return cache;
}

}  // namespace

RealFft::RealFft(Index size) : size_(size) {
  check_config(size >= 2 && size % 2 == 0, "FFT size must be even and >= 2");
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(size);
  if (it == cache.end()) {
    std::vector<Real> real(static_cast<std::size_t>(size));
    std::vector<Real> cplx(static_cast<std::size_t>(2 * (size / 2 + 1)));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    auto* c = reinterpret_cast<FftwComplex*>(cplx.data());
    FftwPlan fwd = plan_r2c(static_cast<int>(size), real.data(), c, flags);
    FftwPlan inv = plan_c2r(static_cast<int>(size), c, real.data(), flags | FFTW_DESTROY_INPUT);
    it = cache.emplace(size, std::make_pair(fwd, inv)).first;
  }
  forward_plan_ = it->second.first;
  inverse_plan_ = it->second.second;
}

void RealFft::forward(const Real* in, Real* out) const {
  thread_local std::vector<Real> scratch;
  scratch.assign(in, in + size_);
  exec_r2c(static_cast<FftwPlan>(forward_plan_), scratch.data(),
           reinterpret_cast<FftwComplex*>(out));
}

void RealFft::inverse(const Real* in, Real* out) const {
  thread_local std::vector<Real> scratch;
  scratch.assign(in, in + 2 * bins());
  scratch[1] = 0;
  scratch[static_cast<std::size_t>(2 * (bins() - 1) + 1)] = 0;
  exec_c2r(static_cast<FftwPlan>(inverse_plan_), reinterpret_cast<FftwComplex*>(scratch.data()),
           out);
}

}  // namespace dsp
}  // namespace LCT_PRECISION_NS
}  // namespace lct
