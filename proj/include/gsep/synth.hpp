// gsep/synth.hpp

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

#include "gsep/common.hpp"
#include "gsep/dsp.hpp"

namespace gsep {

enum class Gender { F, M };

inline std::string gender_name(Gender g) { return g == Gender::F ? "F" : "M"; }

inline Gender gender_from_name(const std::string& s) {
  if (s == "F" || s == "f") return Gender::F;
  if (s == "M" || s == "m") return Gender::M;
  throw ValidationError("gender tag must be F or M, got: " + s);
}

/// One spectral-envelope resonance (formant-like bump).
struct EnvelopePeak {
  double freq_hz = 800.0;
  double bandwidth_hz = 200.0;
};

/// Parametric voice identity used in place of a licensed speech corpus.
/// Identity is carried by the f0 range and the envelope peaks, which is what
/// the separator has to latch onto from the guide segment.
struct SpeakerProfile {
  std::string speaker_id;
  double f0_min_hz = 100.0;
  double f0_max_hz = 140.0;
  std::vector<EnvelopePeak> envelope;
  double tilt_db_per_oct = -6.0;  // spectral rolloff above 200 Hz
  double jitter = 0.01;           // relative f0 perturbation, refreshed every 10 ms
  double vibrato_rate_hz = 5.0;
  double vibrato_depth = 0.015;   // relative f0 excursion
  Gender gender = Gender::F;

  void validate(int sample_rate = 8000) const {
    const double nyquist = sample_rate / 2.0;
    if (speaker_id.empty()) throw ValidationError("speaker profile requires an id");
    if (!(f0_min_hz > 50.0 && f0_max_hz < 400.0 && f0_min_hz <= f0_max_hz))
      throw ValidationError("speaker " + speaker_id + ": f0 range must lie within (50, 400) Hz");
    if (envelope.empty())
      throw ValidationError("speaker " + speaker_id + ": at least one envelope peak required");
    for (const auto& p : envelope) {
      if (!(p.freq_hz > 0.0 && p.freq_hz < nyquist))
        throw ValidationError("speaker " + speaker_id + ": envelope peak must be below Nyquist");
      if (p.bandwidth_hz <= 0.0)
        throw ValidationError("speaker " + speaker_id + ": envelope bandwidth must be positive");
    }
    if (jitter < 0.0 || vibrato_depth < 0.0 || vibrato_rate_hz < 0.0)
      throw ValidationError("speaker " + speaker_id + ": modulation parameters must be >= 0");
  }
};

namespace detail {

inline double envelope_gain(const SpeakerProfile& p, double freq_hz) {
  // Tilted base plus resonance bumps; floor keeps harmonics audible between
  // peaks so the comb structure stays visible in the spectrogram.
  const double tilt =
      std::pow(10.0, p.tilt_db_per_oct * std::log2(std::max(freq_hz, 200.0) / 200.0) / 20.0);
  double bumps = 0.0;
  for (const auto& peak : p.envelope) {
    const double d = (freq_hz - peak.freq_hz) / peak.bandwidth_hz;
    bumps += std::exp(-0.5 * d * d);
  }
  return tilt * (0.1 + bumps);
}

struct VoicedSegment {
  long start = 0, len = 0;
  double f0_start = 0.0, f0_end = 0.0;
  double vibrato_phase = 0.0;
};

}  // namespace detail

/// Synthesizes one utterance: voiced harmonic stretches with a gliding f0,
/// vibrato and jitter, separated by short pauses. Deterministic in
/// (profile, duration, seed); peak amplitude normalized to 0.5.
inline Waveform synth_utterance(const SpeakerProfile& profile, double duration_s,
                                std::uint64_t seed, int sample_rate = 8000) {
  profile.validate(sample_rate);
  if (!(duration_s > 0.2)) throw ValidationError("utterance duration must exceed 0.2 s");

  const long total = std::lround(duration_s * sample_rate);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(static_cast<std::size_t>(total), 0.0);

  Rng rng(mix_seed(seed, 0x5eed));

  // Segment plan: voiced runs of 0.25-0.55 s separated by 40-100 ms pauses.
  std::vector<detail::VoicedSegment> segments;
  long pos = 0;
  while (pos < total) {
    detail::VoicedSegment seg;
    seg.start = pos;
    seg.len = std::min<long>(std::lround(uniform(rng, 0.25, 0.55) * sample_rate), total - pos);
    seg.f0_start = uniform(rng, profile.f0_min_hz, profile.f0_max_hz);
    seg.f0_end = uniform(rng, profile.f0_min_hz, profile.f0_max_hz);
    seg.vibrato_phase = uniform(rng, 0.0, 2.0 * kPi);
    segments.push_back(seg);
    pos += seg.len + std::lround(uniform(rng, 0.04, 0.10) * sample_rate);
  }

  const double nyquist = sample_rate / 2.0;
  const int max_harmonics = static_cast<int>(0.95 * nyquist / profile.f0_min_hz);
  std::vector<double> harmonic_phase(static_cast<std::size_t>(max_harmonics));
  std::vector<double> harmonic_amp(static_cast<std::size_t>(max_harmonics), 0.0);
  const long fade = sample_rate / 100;           // 10 ms raised-cosine edges
  const long jitter_period = sample_rate / 100;  // jitter refresh every 10 ms
  const long amp_period = 32;                    // envelope refresh cadence

  for (const auto& seg : segments) {
    for (auto& ph : harmonic_phase) ph = uniform(rng, 0.0, 2.0 * kPi);
    double jitter_factor = 1.0;
    double phase = 0.0;
    for (long i = 0; i < seg.len; ++i) {
      const double frac = static_cast<double>(i) / std::max<long>(seg.len - 1, 1);
      if (i % jitter_period == 0) jitter_factor = 1.0 + profile.jitter * uniform(rng, -1.0, 1.0);
      const double t = static_cast<double>(i) / sample_rate;
      const double vibrato =
          1.0 + profile.vibrato_depth *
                    std::sin(2.0 * kPi * profile.vibrato_rate_hz * t + seg.vibrato_phase);
      const double f0 =
          (seg.f0_start + frac * (seg.f0_end - seg.f0_start)) * vibrato * jitter_factor;
      phase += 2.0 * kPi * f0 / sample_rate;

      const int n_harm = std::min<int>(max_harmonics, static_cast<int>(0.95 * nyquist / f0));
      if (i % amp_period == 0) {
        for (int k = 1; k <= n_harm; ++k)
          harmonic_amp[static_cast<std::size_t>(k - 1)] = detail::envelope_gain(profile, k * f0);
      }
      double sample = 0.0;
      for (int k = 1; k <= n_harm; ++k)
        sample += harmonic_amp[static_cast<std::size_t>(k - 1)] *
                  std::sin(k * phase + harmonic_phase[static_cast<std::size_t>(k - 1)]);

      double gain = 1.0;
      if (i < fade) gain = 0.5 - 0.5 * std::cos(kPi * i / fade);
      else if (seg.len - 1 - i < fade) gain = 0.5 - 0.5 * std::cos(kPi * (seg.len - 1 - i) / fade);
      w.samples[static_cast<std::size_t>(seg.start + i)] = gain * sample;
    }
  }

  const double peak = peak_abs(w);
  if (peak > 0.0) {
    const double scale = 0.5 / peak;
    for (auto& s : w.samples) s *= scale;
  }
  return w;
}

}  // namespace gsep
