// tests/test_network.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include "gsep/network.hpp"
#include "test_helpers.hpp"

using namespace gsep;
using namespace gsep::testing;

TEST_CASE("eval-mode forward is bit-identical across calls") {
  auto arch = tiny_arch(5, {4, 3}, 6);
  auto params = init_network<double>(arch, unit_stats(5), 7);
  auto feats = random_features(12, 5, 3);
  auto a = forward(feats, params);
  auto b = forward(feats, params);
  REQUIRE(a.frames == b.frames);
  CHECK(a.kind == MaskKind::estimate);
}

TEST_CASE("all-zero parameters produce a zero mask") {
  auto arch = tiny_arch();
  NetworkParams<double> params;
  static_cast<NetTensors<double>&>(params) = NetTensors<double>::zeros(arch);
  params.norm_stats = unit_stats(arch.input_dim);
  params.arch_meta = arch;
  auto out = forward(random_features(9, arch.input_dim, 5), params);
  CHECK(out.frames.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("network output is nonnegative (ReLU head)") {
  auto arch = tiny_arch(5, {4}, 8);
  auto params = init_network<double>(arch, unit_stats(5), 11);
  auto out = forward(random_features(30, 5, 13, 3.0), params);
  CHECK(out.frames.minCoeff() >= 0.0);
}

TEST_CASE("one-shot and frame-by-frame streaming agree") {
  auto arch = tiny_arch(6, {5, 4}, 7);
  arch.stft.fft_size = 16;  // input_dim independent of stft there; fix bins
  arch.stft.window_len = 16;
  arch.stft.hop = 8;
  arch.input_dim = 9;
  arch.output_dim = 9;
  auto params = init_network<double>(arch, unit_stats(9), 17);
  auto feats = random_features(25, 9, 19);

  auto oneshot = forward(feats, params);
  StreamingMaskEstimator<double> streamer(params);
  for (long t = 0; t < feats.frames.rows(); ++t) {
    Vec frame = feats.frames.row(t).transpose();
    Vec out = streamer.step(frame);
    for (long f = 0; f < out.size(); ++f)
      REQUIRE(std::abs(out(f) - oneshot.frames(t, f)) < 1e-9);
  }

  // reset() restarts the recurrence
  streamer.reset();
  Vec again = streamer.step(feats.frames.row(0).transpose());
  for (long f = 0; f < again.size(); ++f)
    REQUIRE(again(f) == Catch::Approx(oneshot.frames(0, f)).margin(1e-12));
}

TEST_CASE("forward rejects a feature dim mismatch") {
  auto arch = tiny_arch();
  auto params = init_network<double>(arch, unit_stats(arch.input_dim), 3);
  CHECK_THROWS_AS(forward(random_features(4, arch.input_dim + 1, 1), params), Error);
}

TEST_CASE("train-mode dropout is reproducible and eval mode ignores the seed") {
  auto arch = tiny_arch(5, {4, 4}, 6, 0.5);
  auto params = init_network<double>(arch, unit_stats(5), 23);
  auto feats = random_features(15, 5, 29);

  ForwardOptions t1{RunMode::train, 42};
  ForwardOptions t2{RunMode::train, 42};
  ForwardOptions t3{RunMode::train, 43};
  auto a = forward(feats, params, t1);
  auto b = forward(feats, params, t2);
  auto c = forward(feats, params, t3);
  CHECK(a.frames == b.frames);
  CHECK(a.frames != c.frames);

  auto e1 = forward(feats, params, {RunMode::eval, 1});
  auto e2 = forward(feats, params, {RunMode::eval, 999});
  CHECK(e1.frames == e2.frames);
}

TEST_CASE("inverted dropout preserves the expected pre-output activation") {
  // One LSTM layer, dropout only on its output, and the hidden-dense
  // pre-activation is linear in the dropout mask: averaging train-mode
  // pre-activations over many draws must approach the eval-mode value.
  auto arch = tiny_arch(5, {6}, 5, 0.3);
  auto params = init_network<double>(arch, unit_stats(5), 31);
  auto feats = random_features(6, 5, 37);

  ForwardCache<double> eval_cache;
  forward(feats, params, {RunMode::eval, 0}, &eval_cache);
  const MatX<double> eval_pre = eval_cache.z_hidden;

  MatX<double> mean = MatX<double>::Zero(eval_pre.rows(), eval_pre.cols());
  const int draws = 20000;
  for (int d = 0; d < draws; ++d) {
    ForwardCache<double> cache;
    forward(feats, params, {RunMode::train, static_cast<std::uint64_t>(d)}, &cache);
    mean += cache.z_hidden;
  }
  mean /= static_cast<double>(draws);

  for (long r = 0; r < mean.rows(); ++r)
    for (long c = 0; c < mean.cols(); ++c) {
      const double denom = std::max(std::abs(eval_pre(r, c)), 0.05);
      REQUIRE(std::abs(mean(r, c) - eval_pre(r, c)) / denom < 0.02);
    }
}

TEST_CASE("mse_loss hand cases") {
  MaskSequence est{Mat::Zero(2, 2), MaskKind::estimate};
  MaskSequence tgt{Mat::Zero(2, 2), MaskKind::psm_target};
  CHECK(mse_loss(est, tgt) == 0.0);

  est.frames.setConstant(0.75);
  tgt.frames.setConstant(0.25);
  CHECK(mse_loss(est, tgt) == Catch::Approx(0.25));

  est.frames << 0, 1, 1, 0;
  tgt.frames << 1, 1, 0, 0;
  CHECK(mse_loss(est, tgt) == Catch::Approx(0.5));

  MaskSequence wrong{Mat::Zero(3, 2), MaskKind::psm_target};
  CHECK_THROWS_AS(mse_loss(est, wrong), Error);
}

TEST_CASE("magnitude weighting normalizes by the weight sum") {
  MaskSequence est{Mat::Zero(1, 2), MaskKind::estimate};
  MaskSequence tgt{Mat::Zero(1, 2), MaskKind::psm_target};
  est.frames << 1.0, 1.0;
  tgt.frames << 0.0, 0.0;
  Mat w(1, 2);
  w << 3.0, 1.0;
  // (3*1 + 1*1) / 4 = 1
  CHECK(mse_loss(est, tgt, LossWeighting::magnitude, &w) == Catch::Approx(1.0));
  w << 1.0, 0.0;
  CHECK(mse_loss(est, tgt, LossWeighting::magnitude, &w) == Catch::Approx(1.0));
  est.frames << 1.0, 5.0;  // second bin carries zero weight
  CHECK(mse_loss(est, tgt, LossWeighting::magnitude, &w) == Catch::Approx(1.0));
  CHECK_THROWS_AS(mse_loss(est, tgt, LossWeighting::magnitude, nullptr), Error);
}

TEST_CASE("init_network sets the forget bias to one and bounded weights") {
  auto arch = tiny_arch(5, {4, 4}, 6);
  auto params = init_network<float>(arch, unit_stats(5), 51);
  for (const auto& layer : params.lstm_layers) {
    CHECK((layer.b_f.array() == 1.0f).all());
    CHECK((layer.b_i.array() == 0.0f).all());
    const double k = 1.0 / std::sqrt(static_cast<double>(layer.W_ii.cols()));
    CHECK(layer.W_ii.cwiseAbs().maxCoeff() <= k);
    CHECK(layer.W_hg.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(4.0));
  }
  CHECK((params.hidden_fc.b.array() == 0.0f).all());

  // different seeds give different weights, same seed identical
  auto again = init_network<float>(arch, unit_stats(5), 51);
  auto other = init_network<float>(arch, unit_stats(5), 52);
  CHECK(params.lstm_layers[0].W_ii == again.lstm_layers[0].W_ii);
  CHECK(params.lstm_layers[0].W_ii != other.lstm_layers[0].W_ii);
}
