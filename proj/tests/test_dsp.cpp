// tests/test_dsp.cpp

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

#include "gsep/dsp.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace gsep;

namespace {

Waveform random_waveform(double duration_s, std::uint64_t seed, int rate = 8000) {
  Waveform w;
  w.sample_rate = rate;
  const long n = std::lround(duration_s * rate);
  w.samples.resize(static_cast<std::size_t>(n));
  Rng rng(seed);
  for (auto& s : w.samples) s = uniform(rng, -0.5, 0.5);
  return w;
}

Waveform sinusoid(double freq_hz, double duration_s, double amp = 1.0, int rate = 8000) {
  Waveform w;
  w.sample_rate = rate;
  const long n = std::lround(duration_s * rate);
  w.samples.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i)
    w.samples[static_cast<std::size_t>(i)] = amp * std::sin(2.0 * kPi * freq_hz * i / rate);
  return w;
}

double max_abs_diff(const Waveform& a, const Waveform& b) {
  REQUIRE(a.samples.size() == b.samples.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    m = std::max(m, std::abs(a.samples[i] - b.samples[i]));
  return m;
}

// Framing policy replicated independently of the library implementation:
// reflect padding (mirror around endpoints) with window_len/2 on the left,
// frame n starting at n*hop in padded coordinates.
long oracle_reflect(long i, long len) {
  if (len == 1) return 0;
  const long period = 2 * (len - 1);
  long m = i % period;
  if (m < 0) m += period;
  return m < len ? m : period - m;
}

std::vector<double> oracle_frame(const Waveform& w, const StftConfig& cfg, long frame) {
  const long left = cfg.window_len / 2;
  std::vector<double> out(static_cast<std::size_t>(cfg.window_len));
  for (int j = 0; j < cfg.window_len; ++j) {
    const long p = frame * cfg.hop + j - left;
    const double ham = 0.54 - 0.46 * std::cos(2.0 * kPi * j / cfg.window_len);
    out[static_cast<std::size_t>(j)] =
        ham * w.samples[static_cast<std::size_t>(oracle_reflect(p, w.size()))];
  }
  return out;
}

// O(N^2) DFT, the oracle for the radix-2 FFT path.
std::vector<std::complex<double>> oracle_dft(const std::vector<double>& x, int fft_size) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(fft_size / 2 + 1));
  for (int f = 0; f <= fft_size / 2; ++f) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double ang = -2.0 * kPi * f * static_cast<double>(j) / fft_size;
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[static_cast<std::size_t>(f)] = acc;
  }
  return out;
}

// Bisection on x^3 = v; independent of std::cbrt and of the implementation.
double cbrt_oracle(double v) {
  double lo = 0.0, hi = std::max(1.0, v);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid * mid * mid < v ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("stft of silence is all zero with 129 bins") {
  Waveform w;
  w.samples.assign(8000, 0.0);
  auto spec = stft(w, StftConfig{});
  CHECK(spec.num_bins() == 129);
  CHECK(spec.frames.cwiseAbs().maxCoeff() == 0.0);
  CHECK(spec.original_len == 8000);
}

TEST_CASE("stft bin count is fixed by the config, not the input length") {
  for (double dur : {0.13, 0.5, 1.0, 2.7}) {
    auto spec = stft(random_waveform(dur, 42), StftConfig{});
    CHECK(spec.num_bins() == 129);
  }
}

TEST_CASE("stft matches a direct per-frame DFT oracle on a bin-centered sinusoid") {
  const StftConfig cfg;
  const int k = 32;  // bin center: k * 8000 / 256 = 1000 Hz
  auto w = sinusoid(k * 8000.0 / 256.0, 1.5);
  auto spec = stft(w, cfg);

  for (long n = 0; n < spec.num_frames(); ++n) {
    auto frame = oracle_frame(w, cfg, n);
    auto ref = oracle_dft(frame, cfg.fft_size);
    for (int f = 0; f < cfg.bins(); ++f) {
      CAPTURE(n, f);
      REQUIRE(std::abs(spec.frames(n, f) - ref[static_cast<std::size_t>(f)]) < 1e-8);
    }
  }

  // Interior frames concentrate at bin k, side bins per Hamming leakage.
  const long first_full = cfg.window_len / cfg.hop + 1;
  for (long n = first_full; n < spec.num_frames() - first_full; ++n) {
    long argmax = 0;
    double best = 0.0;
    for (int f = 0; f < cfg.bins(); ++f) {
      const double m = std::abs(spec.frames(n, f));
      if (m > best) {
        best = m;
        argmax = f;
      }
    }
    REQUIRE(argmax == k);
    // Periodic Hamming on an exact-bin sinusoid leaks only into k +- 1.
    for (int f = 0; f < cfg.bins(); ++f) {
      if (std::abs(f - k) > 1) CHECK(std::abs(spec.frames(n, f)) < 1e-6 * best);
    }
  }
}

TEST_CASE("istft(stft(w)) round trip is exact to 1e-6") {
  auto w = random_waveform(1.5, 7);
  auto back = istft(stft(w, StftConfig{}));
  CHECK(back.size() == w.size());
  CHECK(max_abs_diff(w, back) <= 1e-6);
}

TEST_CASE("istft of an all-zero spectrogram is an all-zero waveform of original length") {
  auto spec = stft(random_waveform(0.9, 3), StftConfig{});
  spec.frames.setZero();
  auto w = istft(spec);
  CHECK(w.size() == spec.original_len);
  for (double s : w.samples) CHECK(s == 0.0);
}

TEST_CASE("440 Hz sinusoid survives the round trip to 1e-6 relative L2") {
  auto w = sinusoid(440.0, 1.2, 0.8);
  auto back = istft(stft(w, StftConfig{}));
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    err += (w.samples[i] - back.samples[i]) * (w.samples[i] - back.samples[i]);
    ref += w.samples[i] * w.samples[i];
  }
  CHECK(std::sqrt(err / ref) <= 1e-6);
}

TEST_CASE("round trip property over random lengths and seeds") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const double dur = uniform(rng, 0.05, 2.0);
    auto w = random_waveform(dur, rng());
    auto back = istft(stft(w, StftConfig{}));
    CAPTURE(trial, dur);
    REQUIRE(max_abs_diff(w, back) <= 1e-6);
  }
}

TEST_CASE("stft is linear") {
  auto w1 = random_waveform(0.7, 11);
  auto w2 = random_waveform(0.7, 12);
  const double a = 1.7, b = -0.4;
  Waveform mix;
  mix.sample_rate = w1.sample_rate;
  mix.samples.resize(w1.samples.size());
  for (std::size_t i = 0; i < mix.samples.size(); ++i)
    mix.samples[i] = a * w1.samples[i] + b * w2.samples[i];

  auto s1 = stft(w1, StftConfig{});
  auto s2 = stft(w2, StftConfig{});
  auto sm = stft(mix, StftConfig{});
  CMat expect = a * s1.frames + b * s2.frames;
  CHECK((sm.frames - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fft satisfies Parseval on random frames") {
  Rng rng(5);
  for (int len : {64, 256, 1024}) {
    std::vector<cplx> x(static_cast<std::size_t>(len));
    double time_energy = 0.0;
    for (auto& v : x) {
      v = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
      time_energy += std::norm(v);
    }
    auto X = x;
    fft_radix2(X, false);
    double freq_energy = 0.0;
    for (const auto& v : X) freq_energy += std::norm(v);
    CHECK(freq_energy == Catch::Approx(len * time_energy).epsilon(1e-12));

    fft_radix2(X, true);  // inverse returns the input
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(X[i] - x[i]));
    CHECK(err < 1e-12);
  }
}

TEST_CASE("stft input validation") {
  CHECK_THROWS_WITH(stft(Waveform{}, StftConfig{}), Catch::Matchers::ContainsSubstring("empty"));
  Waveform bad;
  bad.samples = {0.0, std::nan(""), 0.1};
  CHECK_THROWS_WITH(stft(bad, StftConfig{}), Catch::Matchers::ContainsSubstring("invalid sample"));
  StftConfig broken;
  broken.hop = 0;
  CHECK_THROWS_AS(stft(random_waveform(0.5, 1), broken), ValidationError);
  StftConfig not_pow2;
  not_pow2.window_len = 200;
  not_pow2.hop = 100;
  not_pow2.fft_size = 200;
  CHECK_THROWS_AS(stft(random_waveform(0.5, 1), not_pow2), ValidationError);
}

TEST_CASE("istft rejects a bin-count/config mismatch") {
  auto spec = stft(random_waveform(0.5, 9), StftConfig{});
  spec.frames.conservativeResize(spec.frames.rows(), 64);
  CHECK_THROWS_AS(istft(spec), Error);
}

TEST_CASE("compress_magnitude computes cube roots") {
  auto spec = stft(random_waveform(0.3, 21), StftConfig{});
  spec.frames.setZero();
  spec.frames(0, 0) = cplx(8.0, 0.0);
  spec.frames(0, 1) = cplx(0.0, -2.0);   // magnitude 2
  spec.frames(1, 5) = cplx(-8.0, 0.0);
  auto c = compress_magnitude(spec);
  CHECK(c(0, 0) == Catch::Approx(2.0).margin(1e-12));
  CHECK(c(1, 5) == Catch::Approx(2.0).margin(1e-12));
  CHECK(c(0, 1) == Catch::Approx(cbrt_oracle(2.0)).margin(1e-9));
  CHECK(c(2, 2) == 0.0);
  CHECK(c.minCoeff() >= 0.0);
}

TEST_CASE("compress_magnitude is monotone in magnitude") {
  Rng rng(31);
  auto spec = stft(random_waveform(0.4, 77), StftConfig{});
  auto c = compress_magnitude(spec);
  for (int trial = 0; trial < 500; ++trial) {
    const long n1 = static_cast<long>(uniform_index(rng, static_cast<std::uint64_t>(spec.num_frames())));
    const long n2 = static_cast<long>(uniform_index(rng, static_cast<std::uint64_t>(spec.num_frames())));
    const long f1 = static_cast<long>(uniform_index(rng, 129));
    const long f2 = static_cast<long>(uniform_index(rng, 129));
    if (std::abs(spec.frames(n1, f1)) <= std::abs(spec.frames(n2, f2)))
      CHECK(c(n1, f1) <= c(n2, f2));
  }
}

TEST_CASE("fit_norm_stats on constant input floors the std") {
  Mat m = Mat::Constant(10, 4, 3.0);
  auto stats = fit_norm_stats({m});
  for (int f = 0; f < 4; ++f) {
    CHECK(stats.mean(f) == Catch::Approx(3.0));
    CHECK(stats.std(f) == kStdFloor);
  }
}

TEST_CASE("fit_norm_stats uses the population convention") {
  Mat m(2, 3);
  m.row(0).setConstant(1.0);
  m.row(1).setConstant(3.0);
  auto stats = fit_norm_stats({m});
  for (int f = 0; f < 3; ++f) {
    CHECK(stats.mean(f) == Catch::Approx(2.0));
    CHECK(stats.std(f) == Catch::Approx(1.0));  // population: sqrt(((1-2)^2+(3-2)^2)/2)
  }
}

TEST_CASE("stats applied back to their own training set give zero mean, unit variance") {
  Rng rng(99);
  std::vector<Mat> feats;
  for (int u = 0; u < 4; ++u) {
    Mat m(20 + u * 3, 6);
    for (long r = 0; r < m.rows(); ++r)
      for (long c = 0; c < m.cols(); ++c) m(r, c) = uniform(rng, 0.0, 4.0);
    feats.push_back(m);
  }
  auto stats = fit_norm_stats(feats);
  long total = 0;
  Vec sum = Vec::Zero(6), sumsq = Vec::Zero(6);
  for (const auto& m : feats) {
    auto n = normalize(m, stats).frames;
    sum += n.colwise().sum().transpose();
    sumsq += n.array().square().matrix().colwise().sum().transpose();
    total += m.rows();
  }
  for (int f = 0; f < 6; ++f) {
    CHECK(std::abs(sum(f) / total) < 1e-6);
    CHECK(std::abs(sumsq(f) / total - 1.0) < 1e-6);
  }
}

TEST_CASE("fit_norm_stats rejects an empty collection") {
  CHECK_THROWS_AS(fit_norm_stats({}), Error);
  CHECK_THROWS_AS(fit_norm_stats({Mat(0, 4)}), Error);
}

TEST_CASE("normalize hand cases and invertibility") {
  NormStats stats;
  stats.mean = Vec::Constant(3, 2.0);
  stats.std = Vec::Constant(3, 1.5);

  Mat at_mean = Mat::Constant(2, 3, 2.0);
  CHECK(normalize(at_mean, stats).frames.cwiseAbs().maxCoeff() == 0.0);

  Mat one_sigma = Mat::Constant(2, 3, 3.5);
  CHECK((normalize(one_sigma, stats).frames.array() - 1.0).abs().maxCoeff() < 1e-12);

  Mat x = Mat::Constant(1, 3, 5.0);
  CHECK(normalize(x, stats).frames(0, 0) == Catch::Approx(2.0));

  Rng rng(3);
  Mat r(7, 3);
  for (long i = 0; i < r.size(); ++i) r(i) = uniform(rng, -4, 4);
  auto n = normalize(r, stats);
  CHECK((denormalize(n.frames, stats) - r).cwiseAbs().maxCoeff() < 1e-9);

  Mat wrong(2, 5);
  CHECK_THROWS_AS(normalize(wrong, stats), Error);
}
