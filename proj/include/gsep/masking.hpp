// gsep/masking.hpp

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

#include "gsep/dsp.hpp"

namespace gsep {

enum class MaskKind { psm_target, estimate };

/// Per-frame, per-bin real mask values on the STFT grid of the mixture.
struct MaskSequence {
  Mat frames;  // N x F
  MaskKind kind = MaskKind::estimate;
};

struct PsmOptions {
  bool clamp = true;       // truncate targets to [0, 1]
  double eps_mag = 1e-8;   // |Y| below this defines the mask as 0
};

/// Phase-sensitive mask: |S_t| * cos(theta_y - theta_st) / |Y|, computed as
/// Re(S_t * conj(Y)) / |Y|^2 so no explicit phases are needed.
inline MaskSequence psm(const ComplexSpectrogram& target_spec, const ComplexSpectrogram& mix_spec,
                        const PsmOptions& opt = {}) {
  if (target_spec.frames.rows() != mix_spec.frames.rows() ||
      target_spec.frames.cols() != mix_spec.frames.cols())
    throw Error("psm shape mismatch between target and mixture spectrograms");
  if (target_spec.config.hop != mix_spec.config.hop ||
      target_spec.config.window_len != mix_spec.config.window_len ||
      target_spec.config.fft_size != mix_spec.config.fft_size)
    throw Error("psm config mismatch between target and mixture spectrograms");

  const long N = mix_spec.frames.rows();
  const long F = mix_spec.frames.cols();
  MaskSequence mask;
  mask.kind = MaskKind::psm_target;
  mask.frames.resize(N, F);
  for (long n = 0; n < N; ++n) {
    for (long f = 0; f < F; ++f) {
      const cplx y = mix_spec.frames(n, f);
      const double mag2 = std::norm(y);
      if (mag2 < opt.eps_mag * opt.eps_mag) {
        mask.frames(n, f) = 0.0;
        continue;
      }
      double v = (target_spec.frames(n, f) * std::conj(y)).real() / mag2;
      if (opt.clamp) v = std::clamp(v, 0.0, 1.0);
      mask.frames(n, f) = v;
    }
  }
  return mask;
}

/// ISTFT(mask o Y): Hadamard product with the mixture spectrogram, mixture
/// phase retained, output trimmed to the mixture's original length.
inline Waveform apply_mask_resynth(const MaskSequence& mask, const ComplexSpectrogram& mix_spec) {
  if (mask.frames.rows() != mix_spec.frames.rows() ||
      mask.frames.cols() != mix_spec.frames.cols())
    throw Error("mask/spectrogram shape mismatch");
  ComplexSpectrogram masked = mix_spec;
  masked.frames = mix_spec.frames.cwiseProduct(mask.frames.cast<cplx>());
  return istft(masked);
}

}  // namespace gsep
