// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference check of autograd gradients. The scalar probed is
// <seed, f(x)> with a random seed tensor, so every output element contributes.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lct/autograd.hpp"
#include "lct/nn/layers.hpp"

namespace lct::testing {

using GradFn = std::function<Var(const std::vector<Var>&)>;

struct GradReport {
  double rel_error = 0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double norm = 0;
};

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (Index i = 0; i < t.numel(); ++i) t[i] = static_cast<Real>(u(rng));
  return t;
}

/// Checks the gradient with respect to every input in `inputs`; the largest
/// relative error over inputs is returned.
inline GradReport grad_check(const GradFn& f, const std::vector<Tensor>& inputs, std::mt19937_64& rng,
                             double step = 1e-6) {
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(parameter(t));
  const Var out = f(vars);
  const Tensor seed = random_tensor(out.shape(), rng);
  backward(out, seed);

  auto probe = [&](const std::vector<Tensor>& xs) {
    NoGradGuard guard;
    std::vector<Var> vs;
    for (const auto& t : xs) vs.push_back(constant(t));
    const Tensor y = f(vs).value();
    double s = 0;
    for (Index i = 0; i < y.numel(); ++i) s += static_cast<double>(y[i]) * static_cast<double>(seed[i]);
    return s;
  };

  GradReport report;
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    std::vector<Tensor> xs = inputs;
    double diff2 = 0, a2 = 0, n2 = 0;
    for (Index i = 0; i < xs[which].numel(); ++i) {
      const Real saved = xs[which][i];
      xs[which][i] = static_cast<Real>(saved + step);
      const double up = probe(xs);
      xs[which][i] = static_cast<Real>(saved - step);
      const double down = probe(xs);
      xs[which][i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double analytic = vars[which].has_grad() ? static_cast<double>(vars[which].grad()[i]) : 0.0;
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
    }
    const double scale = std::max(std::sqrt(a2), std::sqrt(n2));
    const double rel = scale > 1e-12 ? std::sqrt(diff2) / scale : std::sqrt(diff2);
    report.rel_error = std::max(report.rel_error, rel);
    report.norm = std::max(report.norm, scale);
  }
  return report;
}

/// Directional form for large parameter sets: for K random unit-variance
/// directions u, <grad L, u> is compared with (L(x + h u) - L(x - h u)) / 2h.
/// The relative error is taken over the K projections. A direction whose
/// difference quotients at h and h/2 disagree crosses a kink (leaky ReLU,
/// |x|) inside the probe segment and is drawn again.
inline GradReport directional_check(const std::function<double()>& probe, const std::vector<Tensor*>& targets,
                                    const std::vector<const Tensor*>& grads, std::mt19937_64& rng, int directions,
                                    double step) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  double diff2 = 0, a2 = 0, n2 = 0;
  int accepted = 0;
  for (int attempt = 0; accepted < directions && attempt < 8 * directions; ++attempt) {
    std::vector<std::vector<double>> u(targets.size());
    double analytic = 0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      u[t].resize(static_cast<std::size_t>(targets[t]->numel()));
      for (Index i = 0; i < targets[t]->numel(); ++i) {
        u[t][i] = gauss(rng);
        if (grads[t]) analytic += u[t][i] * static_cast<double>((*grads[t])[i]);
      }
    }
    std::vector<Tensor> saved;
    for (auto* t : targets) saved.push_back(*t);
    auto quotient = [&](double h) {
      auto shift = [&](double by) {
        for (std::size_t t = 0; t < targets.size(); ++t)
          for (Index i = 0; i < targets[t]->numel(); ++i)
            (*targets[t])[i] = static_cast<Real>(saved[t][i] + by * u[t][i]);
      };
      shift(h);
      const double up = probe();
      shift(-h);
      const double down = probe();
      for (std::size_t t = 0; t < targets.size(); ++t) *targets[t] = saved[t];
      return (up - down) / (2 * h);
    };
    const double numeric = quotient(step);
    const double half = quotient(step / 2);
    if (std::abs(numeric - half) > 1e-6 * (std::abs(numeric) + std::abs(half)) + 1e-10) continue;
    ++accepted;
    diff2 += (analytic - numeric) * (analytic - numeric);
    a2 += analytic * analytic;
    n2 += numeric * numeric;
  }
  if (accepted < directions) return {1.0, 0.0};
  GradReport report;
  report.norm = std::max(std::sqrt(a2), std::sqrt(n2));
  report.rel_error = report.norm > 1e-12 ? std::sqrt(diff2) / report.norm : std::sqrt(diff2);
  return report;
}

/// Directional check of a scalar loss against every tensor of a parameter store.
inline GradReport grad_check_params(const std::function<Var()>& loss, nn::ParamStore& store, std::mt19937_64& rng,
                                    int directions = 8, double step = 1e-6) {
  store.zero_grad();
  backward(loss());
  std::vector<Tensor*> targets;
  std::vector<const Tensor*> grads;
  for (auto& [name, var] : store.entries()) {
    targets.push_back(&var.mutable_value());
    grads.push_back(var.has_grad() ? &var.grad() : nullptr);
  }
  auto probe = [&] {
    NoGradGuard guard;
    return static_cast<double>(loss().value()[0]);
  };
  return directional_check(probe, targets, grads, rng, directions, step);
}

/// Directional check of a scalar function of input tensors.
inline GradReport grad_check_directional(const GradFn& f, const std::vector<Tensor>& inputs, std::mt19937_64& rng,
                                         int directions = 8, double step = 1e-6) {
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(parameter(t));
  backward(f(vars));
  std::vector<Tensor> xs = inputs;
  std::vector<Tensor*> targets;
  std::vector<const Tensor*> grads;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    targets.push_back(&xs[i]);
    grads.push_back(vars[i].has_grad() ? &vars[i].grad() : nullptr);
  }
  auto probe = [&] {
    NoGradGuard guard;
    std::vector<Var> vs;
    for (const auto& t : xs) vs.push_back(constant(t));
    return static_cast<double>(f(vs).value()[0]);
  };
  return directional_check(probe, targets, grads, rng, directions, step);
}

}  // namespace lct::testing
