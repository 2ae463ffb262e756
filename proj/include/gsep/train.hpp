// gsep/train.hpp

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

#include <functional>
#include <limits>
#include <vector>

#include "gsep/adam.hpp"
#include "gsep/mixture.hpp"
#include "gsep/network.hpp"

namespace gsep {

struct TrainConfig {
  int epochs = 40;
  int patience = 5;  // early stopping on validation loss
  int batch_size = 1;
  std::uint64_t seed = 123;
  AdamConfig adam;
  double grad_clip = 5.0;
  LossWeighting weighting = LossWeighting::plain;
  int bptt_truncate = 0;  // 0 = full backpropagation through time

  void validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (patience < 0) throw ValidationError("patience must be >= 0");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (adam.lr <= 0.0) throw ValidationError("learning rate must be positive");
    if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0)
      throw ValidationError("adam betas must lie in [0, 1)");
    if (grad_clip < 0.0) throw ValidationError("grad_clip must be >= 0 (0 disables)");
    if (bptt_truncate < 0) throw ValidationError("bptt_truncate must be >= 0");
  }
};

struct EpochLog {
  int epoch = 0;        // 0 is the pre-training baseline
  double train_mse = 0.0;
  double valid_mse = 0.0;
};

template <class S>
struct TrainResult {
  NetworkParams<S> params;  // best-validation snapshot
  AdamState<S> opt;         // optimizer state at that snapshot
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

namespace detail {

template <class S>
double eval_loss(const std::vector<TrainingExample>& set, const NetworkParams<S>& params,
                 LossWeighting weighting) {
  if (set.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : set) {
    auto est = forward(ex.features, params);
    sum += mse_loss(est, ex.psm_target, weighting,
                    weighting == LossWeighting::magnitude ? &ex.mix_magnitude : nullptr);
  }
  return sum / static_cast<double>(set.size());
}

}  // namespace detail

/// Epochs of per-utterance (or gradient-accumulated mini-batch) BPTT with
/// Adam; logs per-epoch training and validation loss and returns the
/// best-validation snapshot. Deterministic given cfg.seed.
template <class S>
TrainResult<S> train(const std::vector<TrainingExample>& train_set,
                     const std::vector<TrainingExample>& valid_set, NetworkParams<S> params,
                     const TrainConfig& cfg, AdamState<S>* resume_opt = nullptr,
                     const std::function<void(const EpochLog&)>& on_epoch = {}) {
  cfg.validate();
  if (train_set.empty()) throw ValidationError("training set is empty");

  AdamState<S> opt =
      resume_opt ? *resume_opt : AdamState<S>::zeros(params.arch_meta);

  // Early stopping falls back to the training set when no validation split
  // is provided (single-utterance overfit runs).
  const std::vector<TrainingExample>& valid_eval = valid_set.empty() ? train_set : valid_set;

  TrainResult<S> result;
  const auto push_log = [&](const EpochLog& e) {
    result.log.push_back(e);
    if (on_epoch) on_epoch(e);
  };

  EpochLog baseline{0, detail::eval_loss(train_set, params, cfg.weighting),
                    detail::eval_loss(valid_eval, params, cfg.weighting)};
  push_log(baseline);

  result.params = params;
  result.opt = opt;
  result.best_epoch = 0;
  double best_valid = baseline.valid_mse;
  int since_best = 0;

  Rng order_rng(mix_seed(cfg.seed, 0x0e0c));
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_pinned(order, order_rng);
    double train_loss_sum = 0.0;
    long seen = 0;

    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t batch_end = std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
      NetTensors<S> batch_grads = NetTensors<S>::zeros(params.arch_meta);
      long in_batch = 0;
      for (; pos < batch_end; ++pos) {
        const auto& ex = train_set[order[pos]];
        ForwardCache<S> cache;
        ForwardOptions fwd{RunMode::train,
                           mix_seed(cfg.seed, 0xd40000 + static_cast<std::uint64_t>(epoch) * 100003 +
                                                  order[pos])};
        forward(ex.features, params, fwd, &cache);
        auto back = backward(cache, params, ex.psm_target.frames, cfg.weighting,
                             cfg.weighting == LossWeighting::magnitude ? &ex.mix_magnitude
                                                                       : nullptr,
                             cfg.bptt_truncate);
        if (!std::isfinite(back.loss))
          throw DivergenceError("diverged: non-finite training loss at epoch " +
                                std::to_string(epoch));
        train_loss_sum += back.loss;
        ++seen;
        ++in_batch;
        visit_tensors([&](const std::string&, auto& acc, const auto& g) { acc += g; },
                      batch_grads, back.grads);
      }
      if (in_batch > 1) {
        const S inv = static_cast<S>(1.0 / static_cast<double>(in_batch));
        visit_tensors([&](const std::string&, auto& g) { g *= inv; }, batch_grads);
      }
      clip_grad_norm(batch_grads, cfg.grad_clip);
      adam_step(static_cast<NetTensors<S>&>(params), batch_grads, opt, cfg.adam);
    }

    EpochLog entry{epoch, train_loss_sum / static_cast<double>(seen),
                   detail::eval_loss(valid_eval, params, cfg.weighting)};
    push_log(entry);
    if (!std::isfinite(entry.valid_mse))
      throw DivergenceError("diverged: non-finite validation loss at epoch " +
                            std::to_string(epoch));

    if (entry.valid_mse < best_valid) {
      best_valid = entry.valid_mse;
      result.params = params;
      result.opt = opt;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace gsep
