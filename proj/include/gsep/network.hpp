// gsep/network.hpp

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

#include <string>
#include <vector>

#include "gsep/dsp.hpp"
#include "gsep/lstm.hpp"
#include "gsep/masking.hpp"

namespace gsep {

enum class Activation { relu, identity };

template <class S>
struct DenseLayerParams {
  MatX<S> W;  // out x in
  VecX<S> b;  // out
  Activation activation = Activation::relu;

  static DenseLayerParams zeros(int input_dim, int output_dim, Activation act) {
    return {MatX<S>::Zero(output_dim, input_dim), VecX<S>::Zero(output_dim), act};
  }

  long input_dim() const { return W.cols(); }
  long output_dim() const { return W.rows(); }
};

/// Architecture description, carried by every checkpoint.
struct ArchMeta {
  int input_dim = 129;
  std::vector<int> lstm_hidden = {512, 512, 512};
  int fc_hidden = 1024;
  int output_dim = 129;
  double dropout = 0.2;
  std::string loss_mode = "mask_mse";  // "mask_mse" or "magnitude_weighted"
  StftConfig stft;

  void validate() const {
    if (input_dim <= 0 || fc_hidden <= 0 || output_dim <= 0 || lstm_hidden.empty())
      throw ValidationError("network dimensions must be positive");
    for (int h : lstm_hidden)
      if (h <= 0) throw ValidationError("lstm hidden sizes must be positive");
    if (dropout < 0.0 || dropout >= 1.0)
      throw ValidationError("dropout rate must lie in [0, 1)");
    stft.validate();
    if (input_dim != stft.bins())
      throw ValidationError("network input dim " + std::to_string(input_dim) +
                            " does not match stft bins " + std::to_string(stft.bins()));
  }
};

/// The trainable tensors. Gradients, Adam moments and parameters all share
/// this structure and are traversed together with visit_tensors.
template <class S>
struct NetTensors {
  std::vector<LstmLayerParams<S>> lstm_layers;
  DenseLayerParams<S> hidden_fc;
  DenseLayerParams<S> output_fc;

  static NetTensors zeros(const ArchMeta& arch) {
    NetTensors t;
    int in = arch.input_dim;
    for (int h : arch.lstm_hidden) {
      t.lstm_layers.push_back(LstmLayerParams<S>::zeros(in, h));
      in = h;
    }
    t.hidden_fc = DenseLayerParams<S>::zeros(in, arch.fc_hidden, Activation::relu);
    t.output_fc = DenseLayerParams<S>::zeros(arch.fc_hidden, arch.output_dim, Activation::relu);
    return t;
  }
};

namespace detail {

template <class F, class... L>
void visit_lstm_layer(F& fn, const std::string& prefix, L&... layer) {
  fn(prefix + ".W_ii", layer.W_ii...);
  fn(prefix + ".W_if", layer.W_if...);
  fn(prefix + ".W_ig", layer.W_ig...);
  fn(prefix + ".W_io", layer.W_io...);
  fn(prefix + ".W_hi", layer.W_hi...);
  fn(prefix + ".W_hf", layer.W_hf...);
  fn(prefix + ".W_hg", layer.W_hg...);
  fn(prefix + ".W_ho", layer.W_ho...);
  fn(prefix + ".b_i", layer.b_i...);
  fn(prefix + ".b_f", layer.b_f...);
  fn(prefix + ".b_g", layer.b_g...);
  fn(prefix + ".b_o", layer.b_o...);
}

}  // namespace detail

/// Calls fn(name, tensor&...) for every trainable tensor, walking any number
/// of structurally identical NetTensors in lock step. The visit order is the
/// checkpoint manifest order.
template <class F, class N0, class... N>
void visit_tensors(F&& fn, N0& first, N&... rest) {
  for (std::size_t l = 0; l < first.lstm_layers.size(); ++l)
    detail::visit_lstm_layer(fn, "lstm" + std::to_string(l), first.lstm_layers[l],
                             rest.lstm_layers[l]...);
  fn("hidden_fc.W", first.hidden_fc.W, rest.hidden_fc.W...);
  fn("hidden_fc.b", first.hidden_fc.b, rest.hidden_fc.b...);
  fn("output_fc.W", first.output_fc.W, rest.output_fc.W...);
  fn("output_fc.b", first.output_fc.b, rest.output_fc.b...);
}

/// Weights, normalization statistics and architecture, as one unit.
template <class S>
struct NetworkParams : NetTensors<S> {
  NormStats norm_stats;
  ArchMeta arch_meta;
};

/// Uniform(-k, k) with k = 1/sqrt(fan_in) for weight matrices; biases zero
/// except the forget bias at +1.
template <class S>
NetworkParams<S> init_network(const ArchMeta& arch, const NormStats& stats, std::uint64_t seed) {
  arch.validate();
  if (stats.bins() != arch.input_dim)
    throw ValidationError("norm stats bin count does not match network input dim");
  NetworkParams<S> params;
  static_cast<NetTensors<S>&>(params) = NetTensors<S>::zeros(arch);
  params.norm_stats = stats;
  params.arch_meta = arch;

  Rng rng(mix_seed(seed, 0x1517));
  visit_tensors(
      [&](const std::string& name, auto& t) {
        if (name.find(".W") != std::string::npos) {
          const double k = 1.0 / std::sqrt(static_cast<double>(t.cols()));
          for (long i = 0; i < t.size(); ++i) t.data()[i] = static_cast<S>(uniform(rng, -k, k));
        } else if (name.size() >= 4 && name.compare(name.size() - 4, 4, ".b_f") == 0) {
          t.setConstant(S(1));
        } else {
          t.setZero();
        }
      },
      params);
  return params;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

enum class RunMode { eval, train };

struct ForwardOptions {
  RunMode mode = RunMode::eval;
  std::uint64_t dropout_seed = 0;
};

/// Activations of a train-mode pass, the input of backward(). Matrices are
/// laid out with one column per frame.
template <class S>
struct ForwardCache {
  bool filled = false;
  std::vector<MatX<S>> x;  // layer inputs; x[L] feeds hidden_fc
  std::vector<MatX<S>> gate_i, gate_f, gate_g, gate_o, cell, tanh_cell, hidden;
  std::vector<MatX<S>> dropout;  // per-layer masks with the 1/keep scale baked in
  MatX<S> z_hidden, a_hidden;
  MatX<S> z_out, output;
};

namespace detail {

template <class S>
MatX<S> apply_activation(const MatX<S>& z, Activation act) {
  if (act == Activation::identity) return z;
  return z.cwiseMax(S(0));
}

}  // namespace detail

/// Streaming pass through the LSTM stack and the two dense layers. In train
/// mode, inverted dropout is applied to every LSTM layer's output and all
/// intermediates are cached for backpropagation; eval mode is deterministic.
template <class S>
MaskSequence forward(const FeatureSequence& features, const NetworkParams<S>& params,
                     const ForwardOptions& opt = {}, ForwardCache<S>* cache = nullptr) {
  const ArchMeta& arch = params.arch_meta;
  if (features.frames.cols() != arch.input_dim)
    throw Error("feature dim " + std::to_string(features.frames.cols()) +
                " does not match network input dim " + std::to_string(arch.input_dim));
  const long T = features.frames.rows();
  if (T == 0) throw Error("empty feature sequence");
  const std::size_t L = params.lstm_layers.size();
  const bool use_dropout = opt.mode == RunMode::train && arch.dropout > 0.0;

  // Pre-draw dropout masks, one stream per layer.
  std::vector<MatX<S>> dropout(L);
  if (use_dropout) {
    const double keep = 1.0 - arch.dropout;
    for (std::size_t l = 0; l < L; ++l) {
      dropout[l].resize(arch.lstm_hidden[l], T);
      Rng rng(mix_seed(opt.dropout_seed, 0xd0 + l));
      for (long t = 0; t < T; ++t)
        for (long u = 0; u < dropout[l].rows(); ++u)
          dropout[l](u, t) = uniform01(rng) < keep ? static_cast<S>(1.0 / keep) : S(0);
    }
  }

  MatX<S> input = features.frames.template cast<S>().transpose();  // F x T

  if (cache) {
    cache->filled = opt.mode == RunMode::train;
    cache->x.assign(L + 1, {});
    cache->gate_i.assign(L, {});
    cache->gate_f.assign(L, {});
    cache->gate_g.assign(L, {});
    cache->gate_o.assign(L, {});
    cache->cell.assign(L, {});
    cache->tanh_cell.assign(L, {});
    cache->hidden.assign(L, {});
    cache->dropout = dropout;
    cache->x[0] = input;
  }

  LstmState<S> state = LstmState<S>::zeros(arch.lstm_hidden);
  MatX<S> layer_in = std::move(input);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& lp = params.lstm_layers[l];
    const long H = lp.hidden_dim();
    MatX<S> layer_out(H, T);
    if (cache) {
      cache->gate_i[l].resize(H, T);
      cache->gate_f[l].resize(H, T);
      cache->gate_g[l].resize(H, T);
      cache->gate_o[l].resize(H, T);
      cache->cell[l].resize(H, T);
      cache->tanh_cell[l].resize(H, T);
      cache->hidden[l].resize(H, T);
    }
    for (long t = 0; t < T; ++t) {
      auto out = lstm_cell_forward<S>(layer_in.col(t), state.h[l], state.c[l], lp);
      state.h[l] = out.h;
      state.c[l] = out.c;
      layer_out.col(t) = out.h;
      if (cache) {
        cache->gate_i[l].col(t) = out.i;
        cache->gate_f[l].col(t) = out.f;
        cache->gate_g[l].col(t) = out.g;
        cache->gate_o[l].col(t) = out.o;
        cache->cell[l].col(t) = out.c;
        cache->tanh_cell[l].col(t) = out.tanh_c;
        cache->hidden[l].col(t) = out.h;
      }
    }
    if (use_dropout) layer_out = layer_out.cwiseProduct(dropout[l]);
    if (cache) cache->x[l + 1] = layer_out;
    layer_in = std::move(layer_out);
  }

  MatX<S> z_hidden = (params.hidden_fc.W * layer_in).colwise() + params.hidden_fc.b;
  MatX<S> a_hidden = detail::apply_activation(z_hidden, params.hidden_fc.activation);
  MatX<S> z_out = (params.output_fc.W * a_hidden).colwise() + params.output_fc.b;
  MatX<S> output = detail::apply_activation(z_out, params.output_fc.activation);

  if (cache) {
    cache->z_hidden = z_hidden;
    cache->a_hidden = a_hidden;
    cache->z_out = z_out;
    cache->output = output;
  }

  MaskSequence mask;
  mask.kind = MaskKind::estimate;
  mask.frames = output.template cast<double>().transpose();
  return mask;
}

/// Stateful frame-by-frame forward for eval-time streaming. Produces the same
/// arithmetic as the one-shot pass.
template <class S>
class StreamingMaskEstimator {
 public:
  explicit StreamingMaskEstimator(const NetworkParams<S>& params)
      : params_(&params), state_(LstmState<S>::zeros(params.arch_meta.lstm_hidden)) {}

  void reset() { state_ = LstmState<S>::zeros(params_->arch_meta.lstm_hidden); }

  Vec step(const Vec& feature_frame) {
    VecX<S> x = feature_frame.cast<S>();
    for (std::size_t l = 0; l < params_->lstm_layers.size(); ++l) {
      auto out = lstm_cell_forward<S>(x, state_.h[l], state_.c[l], params_->lstm_layers[l]);
      state_.h[l] = out.h;
      state_.c[l] = out.c;
      x = out.h;
    }
    VecX<S> z1 = params_->hidden_fc.W * x + params_->hidden_fc.b;
    VecX<S> a1 = params_->hidden_fc.activation == Activation::relu ? z1.cwiseMax(S(0)).eval() : z1;
    VecX<S> z2 = params_->output_fc.W * a1 + params_->output_fc.b;
    VecX<S> out = params_->output_fc.activation == Activation::relu ? z2.cwiseMax(S(0)).eval() : z2;
    return out.template cast<double>();
  }

 private:
  const NetworkParams<S>* params_;
  LstmState<S> state_;
};

// ---------------------------------------------------------------------------
// Loss and backpropagation through time
// ---------------------------------------------------------------------------

enum class LossWeighting { plain, magnitude };

inline LossWeighting loss_weighting_from_name(const std::string& s) {
  if (s == "mask_mse") return LossWeighting::plain;
  if (s == "magnitude_weighted") return LossWeighting::magnitude;
  throw ValidationError("unknown loss mode: " + s);
}

/// Mean squared error between mask sequences. `magnitude` weights each
/// squared error by |Y(n,f)| and normalizes by the weight sum.
inline double mse_loss(const MaskSequence& estimate, const MaskSequence& target,
                       LossWeighting weighting = LossWeighting::plain,
                       const Mat* mix_magnitude = nullptr) {
  if (estimate.frames.rows() != target.frames.rows() ||
      estimate.frames.cols() != target.frames.cols())
    throw Error("mse_loss shape mismatch");
  const Mat diff = estimate.frames - target.frames;
  if (weighting == LossWeighting::plain)
    return diff.array().square().mean();
  if (!mix_magnitude || mix_magnitude->rows() != diff.rows() ||
      mix_magnitude->cols() != diff.cols())
    throw Error("magnitude weighting requires |Y| of matching shape");
  const double wsum = mix_magnitude->sum();
  if (wsum <= 0.0) return 0.0;
  return (diff.array().square() * mix_magnitude->array()).sum() / wsum;
}

template <class S>
struct BackwardResult {
  NetTensors<S> grads;
  double loss = 0.0;
};

/// Exact gradients of the loss with respect to every parameter, by full
/// backpropagation through time. `bptt_truncate` > 0 cuts the recurrent
/// gradient flow at segment boundaries of that length.
template <class S>
BackwardResult<S> backward(const ForwardCache<S>& cache, const NetworkParams<S>& params,
                           const Mat& target, LossWeighting weighting = LossWeighting::plain,
                           const Mat* mix_magnitude = nullptr, int bptt_truncate = 0) {
  if (!cache.filled) throw Error("backward requires a cache from a train-mode forward pass");
  const long T = cache.output.cols();
  const long out_dim = cache.output.rows();
  if (target.rows() != T || target.cols() != out_dim)
    throw Error("backward target shape mismatch");

  BackwardResult<S> result;
  result.grads = NetTensors<S>::zeros(params.arch_meta);

  // Loss and dL/d(output). Weights enter both identically.
  MatX<S> dout(out_dim, T);
  const MatX<S> target_t = target.template cast<S>().transpose();
  if (weighting == LossWeighting::plain) {
    const double scale = 1.0 / static_cast<double>(T * out_dim);
    MatX<S> diff = cache.output - target_t;
    result.loss = static_cast<double>(diff.array().square().sum()) * scale;
    dout = diff * static_cast<S>(2.0 * scale);
  } else {
    if (!mix_magnitude || mix_magnitude->rows() != T || mix_magnitude->cols() != out_dim)
      throw Error("magnitude weighting requires |Y| of matching shape");
    const MatX<S> w = mix_magnitude->template cast<S>().transpose();
    const double wsum = static_cast<double>(w.sum());
    MatX<S> diff = cache.output - target_t;
    if (wsum <= 0.0) {
      result.loss = 0.0;
      dout.setZero();
    } else {
      result.loss = static_cast<double>((diff.array().square() * w.array()).sum()) / wsum;
      dout = (diff.array() * w.array() * static_cast<S>(2.0 / wsum)).matrix();
    }
  }

  // Output layer.
  MatX<S> dz_out = params.output_fc.activation == Activation::relu
                       ? (cache.z_out.array() > S(0)).select(dout, MatX<S>::Zero(out_dim, T)).eval()
                       : dout;
  result.grads.output_fc.W.noalias() = dz_out * cache.a_hidden.transpose();
  result.grads.output_fc.b = dz_out.rowwise().sum();

  // Hidden dense layer.
  MatX<S> da_hidden = params.output_fc.W.transpose() * dz_out;
  MatX<S> dz_hidden =
      params.hidden_fc.activation == Activation::relu
          ? (cache.z_hidden.array() > S(0))
                .select(da_hidden, MatX<S>::Zero(da_hidden.rows(), T))
                .eval()
          : da_hidden;
  const std::size_t L = params.lstm_layers.size();
  result.grads.hidden_fc.W.noalias() = dz_hidden * cache.x[L].transpose();
  result.grads.hidden_fc.b = dz_hidden.rowwise().sum();

  // Gradient arriving at the (possibly dropped) output of the top LSTM layer.
  MatX<S> d_layer_out = params.hidden_fc.W.transpose() * dz_hidden;

  for (std::size_t li = L; li-- > 0;) {
    const auto& lp = params.lstm_layers[li];
    auto& lg = result.grads.lstm_layers[li];
    const long H = lp.hidden_dim();

    // Undo the dropout scaling to reach the raw h_t.
    MatX<S> dh_direct = cache.dropout.empty() || cache.dropout[li].size() == 0
                            ? d_layer_out
                            : d_layer_out.cwiseProduct(cache.dropout[li]).eval();

    MatX<S> da_i(H, T), da_f(H, T), da_g(H, T), da_o(H, T);
    VecX<S> dh_rec = VecX<S>::Zero(H);
    VecX<S> dc_rec = VecX<S>::Zero(H);
    for (long t = T - 1; t >= 0; --t) {
      const auto i = cache.gate_i[li].col(t).array();
      const auto f = cache.gate_f[li].col(t).array();
      const auto g = cache.gate_g[li].col(t).array();
      const auto o = cache.gate_o[li].col(t).array();
      const auto tc = cache.tanh_cell[li].col(t).array();

      const VecX<S> dh = dh_direct.col(t) + dh_rec;
      const VecX<S> dc =
          (dc_rec.array() + dh.array() * o * (S(1) - tc * tc)).matrix();

      da_o.col(t) = (dh.array() * tc * o * (S(1) - o)).matrix();
      if (t > 0) {
        const auto c_prev = cache.cell[li].col(t - 1).array();
        da_f.col(t) = (dc.array() * c_prev * f * (S(1) - f)).matrix();
      } else {
        da_f.col(t).setZero();  // c_{-1} = 0
      }
      da_i.col(t) = (dc.array() * g * i * (S(1) - i)).matrix();
      da_g.col(t) = (dc.array() * i * (S(1) - g * g)).matrix();

      if (bptt_truncate > 0 && t % bptt_truncate == 0) {
        dh_rec.setZero();
        dc_rec.setZero();
      } else {
        dh_rec.noalias() = lp.W_hi.transpose() * da_i.col(t);
        dh_rec.noalias() += lp.W_hf.transpose() * da_f.col(t);
        dh_rec.noalias() += lp.W_hg.transpose() * da_g.col(t);
        dh_rec.noalias() += lp.W_ho.transpose() * da_o.col(t);
        dc_rec = (dc.array() * f).matrix();
      }
    }

    // h_{t-1} matrix: column t holds h at t-1, zero at t = 0.
    MatX<S> h_prev = MatX<S>::Zero(H, T);
    if (T > 1) h_prev.rightCols(T - 1) = cache.hidden[li].leftCols(T - 1);

    const MatX<S>& x_in = cache.x[li];
    lg.W_ii.noalias() = da_i * x_in.transpose();
    lg.W_if.noalias() = da_f * x_in.transpose();
    lg.W_ig.noalias() = da_g * x_in.transpose();
    lg.W_io.noalias() = da_o * x_in.transpose();
    lg.W_hi.noalias() = da_i * h_prev.transpose();
    lg.W_hf.noalias() = da_f * h_prev.transpose();
    lg.W_hg.noalias() = da_g * h_prev.transpose();
    lg.W_ho.noalias() = da_o * h_prev.transpose();
    lg.b_i = da_i.rowwise().sum();
    lg.b_f = da_f.rowwise().sum();
    lg.b_g = da_g.rowwise().sum();
    lg.b_o = da_o.rowwise().sum();

    if (li > 0) {
      d_layer_out.noalias() = lp.W_ii.transpose() * da_i;
      d_layer_out.noalias() += lp.W_if.transpose() * da_f;
      d_layer_out.noalias() += lp.W_ig.transpose() * da_g;
      d_layer_out.noalias() += lp.W_io.transpose() * da_o;
    }
  }
  return result;
}

}  // namespace gsep
