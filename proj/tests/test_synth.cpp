// tests/test_synth.cpp

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

#include "gsep/synth.hpp"
#include "gsep/dsp.hpp"

using namespace gsep;

namespace {

SpeakerProfile profile(const std::string& id, double f0_lo, double f0_hi, Gender g,
                       std::vector<EnvelopePeak> peaks) {
  SpeakerProfile p;
  p.speaker_id = id;
  p.f0_min_hz = f0_lo;
  p.f0_max_hz = f0_hi;
  p.gender = g;
  p.envelope = std::move(peaks);
  return p;
}

// Spectral centroid oracle: mean STFT magnitude per bin, weighted by bin
// center frequency.
double spectral_centroid_hz(const Waveform& w) {
  auto spec = stft(w, StftConfig{});
  double num = 0.0, den = 0.0;
  for (long f = 0; f < spec.num_bins(); ++f) {
    double mag = 0.0;
    for (long n = 0; n < spec.num_frames(); ++n) mag += std::abs(spec.frames(n, f));
    const double freq = static_cast<double>(f) * w.sample_rate / spec.config.fft_size;
    num += freq * mag;
    den += mag;
  }
  return num / den;
}

}  // namespace

TEST_CASE("synth_utterance is deterministic in (profile, seed)") {
  auto p = profile("spk", 120, 160, Gender::M, {{600, 150}, {1800, 300}});
  auto a = synth_utterance(p, 1.3, 42);
  auto b = synth_utterance(p, 1.3, 42);
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(a.samples == b.samples);

  auto c = synth_utterance(p, 1.3, 43);
  CHECK(a.samples != c.samples);
}

TEST_CASE("synth_utterance produces the exact sample count and 0.5 peak") {
  auto p = profile("spk", 100, 130, Gender::M, {{500, 120}});
  auto w = synth_utterance(p, 1.0, 9);
  CHECK(w.size() == 8000);
  CHECK(peak_abs(w) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("low-f0 profiles have a lower spectral centroid than high-f0 profiles") {
  auto low = profile("low", 80, 120, Gender::M, {{500, 150}, {1500, 300}});
  auto high = profile("high", 200, 300, Gender::F, {{900, 200}, {2600, 400}});
  double low_mean = 0.0, high_mean = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    low_mean += spectral_centroid_hz(synth_utterance(low, 1.0, seed));
    high_mean += spectral_centroid_hz(synth_utterance(high, 1.0, seed + 1000));
  }
  CHECK(low_mean / 20.0 < high_mean / 20.0);
}

TEST_CASE("synth_utterance validates its inputs") {
  auto p = profile("spk", 100, 130, Gender::M, {{500, 120}});
  CHECK_THROWS_AS(synth_utterance(p, 0.1, 1), ValidationError);

  auto bad_f0 = profile("bad", 30, 120, Gender::M, {{500, 120}});
  CHECK_THROWS_AS(synth_utterance(bad_f0, 1.0, 1), ValidationError);

  auto bad_peak = profile("bad2", 100, 130, Gender::M, {{5000, 120}});
  CHECK_THROWS_AS(synth_utterance(bad_peak, 1.0, 1), ValidationError);

  auto no_env = profile("bad3", 100, 130, Gender::M, {});
  CHECK_THROWS_AS(synth_utterance(no_env, 1.0, 1), ValidationError);
}

TEST_CASE("utterances contain pauses and voiced stretches") {
  auto p = profile("spk", 150, 200, Gender::F, {{800, 200}});
  auto w = synth_utterance(p, 2.0, 5);
  long silent = 0;
  for (double s : w.samples)
    if (s == 0.0) ++silent;
  CHECK(silent > 0);                  // at least one pause
  CHECK(silent < w.size() * 5 / 10);  // mostly voiced
}
