// gsep/dsp.hpp

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
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "gsep/common.hpp"

namespace gsep {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kStdFloor = 1e-8;  // floor applied to per-bin std deviations

/// Mono discrete-time signal. Samples are dimensionless, nominal range [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 8000;

  long size() const { return static_cast<long>(samples.size()); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(size()) / sample_rate : 0.0;
  }
};

inline void check_finite(const Waveform& w, const char* what = "invalid sample") {
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw Error(what);
  }
}

inline double peak_abs(const Waveform& w) {
  double m = 0.0;
  for (double s : w.samples) m = std::max(m, std::abs(s));
  return m;
}

inline double energy(const Waveform& w) {
  double e = 0.0;
  for (double s : w.samples) e += s * s;
  return e;
}

enum class WindowKind { hamming_periodic, hann_periodic };

inline std::string window_name(WindowKind k) {
  return k == WindowKind::hamming_periodic ? "hamming" : "hann";
}

inline WindowKind window_from_name(const std::string& s) {
  if (s == "hamming") return WindowKind::hamming_periodic;
  if (s == "hann") return WindowKind::hann_periodic;
  throw ValidationError("unknown window kind: " + s);
}

/// Analysis parameters. Defaults give 32 ms frames at 8 kHz with a 16 ms shift
/// and 129 frequency bins.
struct StftConfig {
  int window_len = 256;
  int hop = 128;
  int fft_size = 256;
  WindowKind window_kind = WindowKind::hamming_periodic;

  int bins() const { return fft_size / 2 + 1; }

  void validate() const {
    if (hop <= 0 || window_len < hop || fft_size < window_len)
      throw ValidationError("stft config requires 0 < hop <= window_len <= fft_size");
    if ((fft_size & (fft_size - 1)) != 0)
      throw ValidationError("fft_size must be a power of two");
  }
};

/// N x F complex STFT matrix plus everything needed to invert it.
struct ComplexSpectrogram {
  CMat frames;  // N x F, F = fft_size/2 + 1
  StftConfig config;
  long original_len = 0;
  int sample_rate = 8000;

  long num_frames() const { return frames.rows(); }
  long num_bins() const { return frames.cols(); }
};

/// Per-bin statistics of cube-root compressed magnitudes.
struct NormStats {
  Vec mean;
  Vec std;  // floored at kStdFloor

  long bins() const { return mean.size(); }
};

/// Normalized compressed-magnitude frames, the network input.
struct FeatureSequence {
  Mat frames;  // N x F
  NormStats normalization;
};

// ---------------------------------------------------------------------------
// Windows and FFT
// ---------------------------------------------------------------------------

/// Periodic (DFT-even) window of the given length. Periodic Hamming satisfies
/// constant overlap-add at hop = len/2 with constant 1.08.
inline std::vector<double> make_window(WindowKind kind, int len) {
  std::vector<double> w(static_cast<std::size_t>(len));
  for (int n = 0; n < len; ++n) {
    const double c = std::cos(2.0 * kPi * n / len);
    w[static_cast<std::size_t>(n)] =
        kind == WindowKind::hamming_periodic ? 0.54 - 0.46 * c : 0.5 - 0.5 * c;
  }
  return w;
}

/// Iterative radix-2 FFT, in place. Forward is unnormalized; the inverse
/// divides by the length. Length must be a power of two.
inline void fft_radix2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw Error("fft length must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

namespace detail {

/// Multi-fold reflection index (mirror around the endpoints, edge sample not
/// repeated), valid for any query once len >= 1.
inline long reflect_index(long i, long len) {
  if (len == 1) return 0;
  const long period = 2 * (len - 1);
  long m = i % period;
  if (m < 0) m += period;
  return m < len ? m : period - m;
}

struct FramePlan {
  long num_frames;
  long left_pad;    // window_len / 2
  long padded_len;  // hop*(num_frames-1) + window_len
};

/// Framing policy: reflect-pad by window_len/2 on the left and enough on the
/// right that every original sample is covered by the full set of overlapping
/// windows. Frame n starts at n*hop in padded coordinates, so it is centered
/// on original sample n*hop.
inline FramePlan plan_frames(long len, const StftConfig& cfg) {
  FramePlan p;
  p.left_pad = cfg.window_len / 2;
  p.num_frames = 1 + (len - 1 + p.left_pad) / cfg.hop;
  p.padded_len = cfg.hop * (p.num_frames - 1) + cfg.window_len;
  return p;
}

inline std::vector<double> pad_reflect(const Waveform& w, const FramePlan& plan) {
  std::vector<double> padded(static_cast<std::size_t>(plan.padded_len));
  const long len = w.size();
  for (long p = 0; p < plan.padded_len; ++p) {
    padded[static_cast<std::size_t>(p)] =
        w.samples[static_cast<std::size_t>(reflect_index(p - plan.left_pad, len))];
  }
  return padded;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// STFT / ISTFT
// ---------------------------------------------------------------------------

inline ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  if (w.samples.empty()) throw Error("empty input");
  check_finite(w);

  const auto plan = detail::plan_frames(w.size(), cfg);
  const auto padded = detail::pad_reflect(w, plan);
  const auto window = make_window(cfg.window_kind, cfg.window_len);
  const int F = cfg.bins();

  ComplexSpectrogram spec;
  spec.frames.resize(plan.num_frames, F);
  spec.config = cfg;
  spec.original_len = w.size();
  spec.sample_rate = w.sample_rate;

  std::vector<cplx> buf(static_cast<std::size_t>(cfg.fft_size));
  for (long n = 0; n < plan.num_frames; ++n) {
    const long start = n * cfg.hop;
    for (int j = 0; j < cfg.window_len; ++j)
      buf[static_cast<std::size_t>(j)] =
          padded[static_cast<std::size_t>(start + j)] * window[static_cast<std::size_t>(j)];
    for (int j = cfg.window_len; j < cfg.fft_size; ++j) buf[static_cast<std::size_t>(j)] = 0.0;
    fft_radix2(buf, false);
    for (int f = 0; f < F; ++f) spec.frames(n, f) = buf[static_cast<std::size_t>(f)];
  }
  return spec;
}

/// Overlap-add synthesis, inverse to stft for unmodified spectrograms. Each
/// frame is inverted without re-windowing and the sum is divided by the
/// overlap-added analysis window (the COLA constant in the interior).
inline Waveform istft(const ComplexSpectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  const int F = cfg.bins();
  if (spec.frames.cols() != F)
    throw Error("spectrogram shape inconsistent with config: " +
                std::to_string(spec.frames.cols()) + " bins vs " + std::to_string(F));
  if (spec.original_len < 0) throw Error("negative original_len");
  if (!spec.frames.allFinite()) throw Error("non-finite spectrogram entry");

  const long N = spec.num_frames();
  const auto window = make_window(cfg.window_kind, cfg.window_len);
  const long padded_len = cfg.hop * (N > 0 ? N - 1 : 0) + cfg.window_len;
  std::vector<double> ola(static_cast<std::size_t>(padded_len), 0.0);
  std::vector<double> wsum(static_cast<std::size_t>(padded_len), 0.0);

  std::vector<cplx> buf(static_cast<std::size_t>(cfg.fft_size));
  for (long n = 0; n < N; ++n) {
    for (int f = 0; f < F; ++f) buf[static_cast<std::size_t>(f)] = spec.frames(n, f);
    for (int f = F; f < cfg.fft_size; ++f)
      buf[static_cast<std::size_t>(f)] = std::conj(spec.frames(n, cfg.fft_size - f));
    fft_radix2(buf, true);
    const long start = n * cfg.hop;
    for (int j = 0; j < cfg.window_len; ++j) {
      ola[static_cast<std::size_t>(start + j)] += buf[static_cast<std::size_t>(j)].real();
      wsum[static_cast<std::size_t>(start + j)] += window[static_cast<std::size_t>(j)];
    }
  }

  const long left_pad = cfg.window_len / 2;
  Waveform out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign(static_cast<std::size_t>(spec.original_len), 0.0);
  for (long i = 0; i < spec.original_len; ++i) {
    const long p = i + left_pad;
    if (p < padded_len)
      out.samples[static_cast<std::size_t>(i)] =
          ola[static_cast<std::size_t>(p)] / std::max(wsum[static_cast<std::size_t>(p)], 1e-12);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// Cube-root compressed magnitudes, |X|^(1/3).
inline Mat compress_magnitude(const ComplexSpectrogram& spec) {
  if (!spec.frames.allFinite()) throw Error("non-finite spectrogram entry");
  return spec.frames.array().abs().pow(1.0 / 3.0).matrix();
}

/// Per-bin mean and population standard deviation over all frames of all
/// utterances, std floored at kStdFloor.
inline NormStats fit_norm_stats(const std::vector<Mat>& training_features) {
  long total_frames = 0;
  long bins = -1;
  for (const Mat& m : training_features) {
    if (bins < 0) bins = m.cols();
    if (m.cols() != bins) throw Error("inconsistent bin count across feature matrices");
    total_frames += m.rows();
  }
  if (total_frames == 0) throw Error("no frames to fit normalization statistics");

  Vec sum = Vec::Zero(bins);
  Vec sumsq = Vec::Zero(bins);
  for (const Mat& m : training_features) {
    sum += m.colwise().sum().transpose();
    sumsq += m.array().square().matrix().colwise().sum().transpose();
  }
  NormStats stats;
  stats.mean = sum / static_cast<double>(total_frames);
  Vec var = sumsq / static_cast<double>(total_frames) - stats.mean.array().square().matrix();
  stats.std = var.array().max(0.0).sqrt().max(kStdFloor).matrix();
  return stats;
}

/// (x - mean) / std per bin.
inline FeatureSequence normalize(const Mat& features, const NormStats& stats) {
  if (features.cols() != stats.bins())
    throw Error("feature/stat shape mismatch: " + std::to_string(features.cols()) + " vs " +
                std::to_string(stats.bins()) + " bins");
  FeatureSequence out;
  out.frames = (features.rowwise() - stats.mean.transpose()).array().rowwise() /
               stats.std.transpose().array();
  out.normalization = stats;
  return out;
}

inline Mat denormalize(const Mat& normalized, const NormStats& stats) {
  if (normalized.cols() != stats.bins()) throw Error("feature/stat shape mismatch");
  return (normalized.array().rowwise() * stats.std.transpose().array()).matrix().rowwise() +
         stats.mean.transpose();
}

}  // namespace gsep
