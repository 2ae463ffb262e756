// gsep/mixture.hpp

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

#include "gsep/dsp.hpp"
#include "gsep/masking.hpp"

namespace gsep {

/// Manifest record describing one generated mixture. Wav paths are relative
/// to the manifest file's directory.
struct MixtureSpec {
  std::string id;
  std::string target_wav;
  std::string anchor_wav;
  std::string interf_wav;
  std::string mix_wav;
  double snr_db = 0.0;
  double anchor_len_s = 1.0;
  std::string gender_pair;  // "F&M", "F&F" or "M&M"
  std::string split;        // "train", "valid" or "test"
  std::uint64_t seed = 0;
};

/// The three signals of the mixing model: y = s_t + s_i, where s_t is the
/// anchor-prefixed target and s_i is zero during the anchor.
struct MixtureParts {
  Waveform mixture;        // y
  Waveform target_ref;     // s_t = concat(anchor, target)
  Waveform interference;   // s_i = concat(zeros, scaled interference)
  long anchor_samples = 0;
};

namespace detail {

/// Truncates, or loops with a short equal-power crossfade, to exactly `len`.
inline Waveform match_length(const Waveform& w, long len) {
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(static_cast<std::size_t>(len));
  const long n = w.size();
  if (n >= len) {
    std::copy(w.samples.begin(), w.samples.begin() + len, out.samples.begin());
    return out;
  }
  const long xfade = std::min<long>(w.sample_rate / 100, n / 2);  // 10 ms
  long pos = 0;
  long src = 0;
  while (pos < len) {
    if (src == n) {  // loop seam: crossfade tail into restarted head
      const long span = std::min(xfade, len - pos);
      for (long j = 0; j < span; ++j) {
        const double u = 0.5 * kPi * (j + 1) / (xfade + 1);
        const double tail = w.samples[static_cast<std::size_t>(n - xfade + j)];
        const double head = w.samples[static_cast<std::size_t>(j)];
        out.samples[static_cast<std::size_t>(pos + j)] = std::cos(u) * tail + std::sin(u) * head;
      }
      pos += span;
      src = span;
      continue;
    }
    out.samples[static_cast<std::size_t>(pos)] = w.samples[static_cast<std::size_t>(src)];
    ++pos;
    ++src;
  }
  return out;
}

}  // namespace detail

/// Builds y = s_t + s_i. The anchor's peak is matched to the target's peak,
/// the interference is length-matched to the target and scaled so that the
/// target-to-interference energy ratio over the overlap region equals snr_db,
/// and the whole triple is rescaled if the mixture would clip.
inline MixtureParts build_mixture(const Waveform& anchor, const Waveform& target,
                                  const Waveform& interference, double snr_db) {
  if (target.samples.empty() || interference.samples.empty())
    throw Error("degenerate source: empty target or interference");
  if (anchor.sample_rate != target.sample_rate ||
      interference.sample_rate != target.sample_rate)
    throw Error("sample rate mismatch between mixture sources");
  check_finite(anchor);
  check_finite(target);
  check_finite(interference);

  const double target_peak = peak_abs(target);
  if (target_peak <= 0.0) throw Error("degenerate source: silent target");

  Waveform anchor_scaled = anchor;
  if (!anchor.samples.empty()) {
    const double anchor_peak = peak_abs(anchor);
    if (anchor_peak <= 0.0) throw Error("degenerate source: silent anchor");
    const double g = target_peak / anchor_peak;
    for (auto& s : anchor_scaled.samples) s *= g;
  }

  Waveform interf_matched = detail::match_length(interference, target.size());
  const double e_target = energy(target);
  const double e_interf = energy(interf_matched);
  if (e_interf <= 0.0) throw Error("degenerate source: silent interference");

  // 10*log10(E_t / (alpha^2 E_i)) = snr_db
  const double alpha = std::sqrt(e_target / (e_interf * std::pow(10.0, snr_db / 10.0)));
  for (auto& s : interf_matched.samples) s *= alpha;

  const long A = anchor_scaled.size();
  const long L = A + target.size();
  MixtureParts parts;
  parts.anchor_samples = A;
  parts.target_ref.sample_rate = target.sample_rate;
  parts.interference.sample_rate = target.sample_rate;
  parts.target_ref.samples.resize(static_cast<std::size_t>(L));
  parts.interference.samples.assign(static_cast<std::size_t>(L), 0.0);
  std::copy(anchor_scaled.samples.begin(), anchor_scaled.samples.end(),
            parts.target_ref.samples.begin());
  std::copy(target.samples.begin(), target.samples.end(),
            parts.target_ref.samples.begin() + A);
  std::copy(interf_matched.samples.begin(), interf_matched.samples.end(),
            parts.interference.samples.begin() + A);

  // Headroom: a common gain keeps y inside [-1, 1] for PCM16 materialization
  // and cancels exactly in the SNR. Applied to the sources, then y is formed
  // as the exact sample-wise sum.
  auto form_mixture = [&]() {
    parts.mixture.sample_rate = target.sample_rate;
    parts.mixture.samples.resize(static_cast<std::size_t>(L));
    for (long i = 0; i < L; ++i)
      parts.mixture.samples[static_cast<std::size_t>(i)] =
          parts.target_ref.samples[static_cast<std::size_t>(i)] +
          parts.interference.samples[static_cast<std::size_t>(i)];
  };
  form_mixture();
  const double mix_peak = peak_abs(parts.mixture);
  if (mix_peak > 0.95) {
    const double g = 0.95 / mix_peak;
    for (auto& s : parts.target_ref.samples) s *= g;
    for (auto& s : parts.interference.samples) s *= g;
    form_mixture();
  }
  return parts;
}

/// Number of frames whose center (sample n*hop under the centered framing
/// policy) falls inside the anchor region.
inline int anchor_frame_count(long anchor_samples, const StftConfig& cfg) {
  if (anchor_samples <= 0) return 0;
  return static_cast<int>((anchor_samples - 1) / cfg.hop + 1);
}

/// One supervised example: network input features and PSM target on a shared
/// frame grid.
struct TrainingExample {
  Waveform mixture;           // y
  Waveform target_reference;  // s_t
  FeatureSequence features;
  MaskSequence psm_target;
  Mat mix_magnitude;  // |Y|, for magnitude-weighted losses
  int anchor_frames = 0;
};

inline TrainingExample make_training_example(const Waveform& y, const Waveform& s_t,
                                             const StftConfig& cfg, const NormStats& stats,
                                             long anchor_samples) {
  if (y.size() != s_t.size()) throw Error("mixture/target length mismatch");
  TrainingExample ex;
  ex.mixture = y;
  ex.target_reference = s_t;
  auto mix_spec = stft(y, cfg);
  ex.mix_magnitude = mix_spec.frames.cwiseAbs();
  ex.features = normalize(compress_magnitude(mix_spec), stats);
  ex.psm_target = psm(stft(s_t, cfg), mix_spec);
  ex.anchor_frames = anchor_frame_count(anchor_samples, cfg);
  if (ex.anchor_frames >= ex.features.frames.rows())
    throw Error("anchor region covers the whole sequence");
  return ex;
}

}  // namespace gsep
