// gsep/adam.hpp

// Copyright 2026  The gsep authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "gsep/network.hpp"

namespace gsep {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second-moment accumulators shaped like the parameters.
template <class S>
struct AdamState {
  NetTensors<S> m, v;
  long step_count = 0;

  static AdamState zeros(const ArchMeta& arch) {
    return {NetTensors<S>::zeros(arch), NetTensors<S>::zeros(arch), 0};
  }
};

/// Global L2 norm over all gradient tensors.
template <class S>
double global_grad_norm(const NetTensors<S>& grads) {
  double sq = 0.0;
  visit_tensors([&](const std::string&, const auto& g) { sq += static_cast<double>(g.squaredNorm()); },
                grads);
  return std::sqrt(sq);
}

/// Scales gradients so their global L2 norm does not exceed max_norm.
/// Returns the pre-clip norm.
template <class S>
double clip_grad_norm(NetTensors<S>& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const S scale = static_cast<S>(max_norm / norm);
    visit_tensors([&](const std::string&, auto& g) { g *= scale; }, grads);
  }
  return norm;
}

/// Standard bias-corrected Adam update; increments step_count.
template <class S>
void adam_step(NetTensors<S>& params, const NetTensors<S>& grads, AdamState<S>& state,
               const AdamConfig& cfg) {
  visit_tensors(
      [&](const std::string& name, const auto& g) {
        if (!g.allFinite()) throw DivergenceError("diverged: non-finite gradient in " + name);
      },
      grads);

  state.step_count += 1;
  const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
  const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
  const S beta1 = static_cast<S>(cfg.beta1);
  const S beta2 = static_cast<S>(cfg.beta2);
  const S lr = static_cast<S>(cfg.lr);
  const S eps = static_cast<S>(cfg.eps);
  const S inv_b1t = static_cast<S>(1.0 / b1t);
  const S inv_b2t = static_cast<S>(1.0 / b2t);

  visit_tensors(
      [&](const std::string&, auto& p, const auto& g, auto& m, auto& v) {
        m = beta1 * m + (S(1) - beta1) * g;
        v = (beta2 * v.array() + (S(1) - beta2) * g.array().square()).matrix();
        p.array() -= lr * (m.array() * inv_b1t) / ((v.array() * inv_b2t).sqrt() + eps);
      },
      params, grads, state.m, state.v);
}

}  // namespace gsep
