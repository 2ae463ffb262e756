// gsep/lstm.hpp

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

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gsep/common.hpp"

namespace gsep {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
VecX<S> sigmoid(const VecX<S>& x) {
  return (S(1) / (S(1) + (-x.array()).exp())).matrix();
}

/// Gate weights and biases of one LSTM layer.
///   i = sigmoid(W_ii x + W_hi h + b_i)      f = sigmoid(W_if x + W_hf h + b_f)
///   g = tanh   (W_ig x + W_hg h + b_g)      o = sigmoid(W_io x + W_ho h + b_o)
///   c_t = f o c_{t-1} + i o g               h_t = o o tanh(c_t)
template <class S>
struct LstmLayerParams {
  MatX<S> W_ii, W_if, W_ig, W_io;  // hidden x input
  MatX<S> W_hi, W_hf, W_hg, W_ho;  // hidden x hidden
  VecX<S> b_i, b_f, b_g, b_o;

  static LstmLayerParams zeros(int input_dim, int hidden_dim) {
    LstmLayerParams p;
    for (auto* w : {&p.W_ii, &p.W_if, &p.W_ig, &p.W_io})
      *w = MatX<S>::Zero(hidden_dim, input_dim);
    for (auto* w : {&p.W_hi, &p.W_hf, &p.W_hg, &p.W_ho})
      *w = MatX<S>::Zero(hidden_dim, hidden_dim);
    for (auto* b : {&p.b_i, &p.b_f, &p.b_g, &p.b_o}) *b = VecX<S>::Zero(hidden_dim);
    return p;
  }

  long input_dim() const { return W_ii.cols(); }
  long hidden_dim() const { return W_ii.rows(); }

  void check_shapes() const {
    const long h = hidden_dim(), in = input_dim();
    auto bad = [&](bool cond) {
      if (cond) throw Error("inconsistent lstm layer parameter shapes");
    };
    for (const auto* w : {&W_ii, &W_if, &W_ig, &W_io}) bad(w->rows() != h || w->cols() != in);
    for (const auto* w : {&W_hi, &W_hf, &W_hg, &W_ho}) bad(w->rows() != h || w->cols() != h);
    for (const auto* b : {&b_i, &b_f, &b_g, &b_o}) bad(b->size() != h);
  }
};

/// Recurrent state: one (h, c) pair per layer, zero at sequence start.
template <class S>
struct LstmState {
  std::vector<VecX<S>> h, c;

  static LstmState zeros(const std::vector<int>& hidden_dims) {
    LstmState s;
    for (int d : hidden_dims) {
      s.h.push_back(VecX<S>::Zero(d));
      s.c.push_back(VecX<S>::Zero(d));
    }
    return s;
  }
};

/// All intermediate quantities of one cell step, kept for backpropagation.
template <class S>
struct LstmCellOutput {
  VecX<S> i, f, g, o, c, tanh_c, h;
};

template <class S>
LstmCellOutput<S> lstm_cell_forward(const VecX<S>& x, const VecX<S>& h_prev,
                                    const VecX<S>& c_prev, const LstmLayerParams<S>& p) {
  if (x.size() != p.input_dim())
    throw Error("lstm input dim mismatch: " + std::to_string(x.size()) + " vs " +
                std::to_string(p.input_dim()));
  if (h_prev.size() != p.hidden_dim() || c_prev.size() != p.hidden_dim())
    throw Error("lstm state dim mismatch");

  LstmCellOutput<S> out;
  out.i = sigmoid<S>(p.W_ii * x + p.W_hi * h_prev + p.b_i);
  out.f = sigmoid<S>(p.W_if * x + p.W_hf * h_prev + p.b_f);
  out.g = (p.W_ig * x + p.W_hg * h_prev + p.b_g).array().tanh().matrix();
  out.o = sigmoid<S>(p.W_io * x + p.W_ho * h_prev + p.b_o);
  out.c = (out.f.array() * c_prev.array() + out.i.array() * out.g.array()).matrix();
  out.tanh_c = out.c.array().tanh().matrix();
  out.h = (out.o.array() * out.tanh_c.array()).matrix();
  return out;
}

}  // namespace gsep
