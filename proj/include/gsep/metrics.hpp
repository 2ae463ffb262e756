// gsep/metrics.hpp

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

#include <span>

#include "gsep/dsp.hpp"

namespace gsep {

constexpr double kMetricCapDb = 100.0;  // keeps aggregates finite

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double ratio_db_capped(double num, double den) {
  if (num <= 0.0) return -kMetricCapDb;
  if (den <= 0.0) return kMetricCapDb;
  return std::clamp(10.0 * std::log10(num / den), -kMetricCapDb, kMetricCapDb);
}

}  // namespace detail

/// Scale-invariant SDR: project the estimate onto the reference and compare
/// projection energy against residual energy. Capped at +-100 dB.
inline double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size()) throw Error("si_sdr length mismatch");
  if (estimate.empty()) throw Error("si_sdr on empty signals");
  const double ref_energy = detail::dot(reference, reference);
  if (ref_energy <= 0.0) throw Error("si_sdr reference has zero energy");
  const double alpha = detail::dot(estimate, reference) / ref_energy;
  const double proj_energy = alpha * alpha * ref_energy;
  double resid_energy = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double r = estimate[i] - alpha * reference[i];
    resid_energy += r * r;
  }
  return detail::ratio_db_capped(proj_energy, resid_energy);
}

/// SDR with the estimate optimally gain-matched to the reference:
/// 10 log10(||s||^2 / ||beta*est - s||^2), beta = <est,s>/<est,est>.
inline double sdr_scaled(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size()) throw Error("sdr length mismatch");
  if (estimate.empty()) throw Error("sdr on empty signals");
  const double ref_energy = detail::dot(reference, reference);
  if (ref_energy <= 0.0) throw Error("sdr reference has zero energy");
  const double est_energy = detail::dot(estimate, estimate);
  if (est_energy <= 0.0) return -kMetricCapDb;
  const double beta = detail::dot(estimate, reference) / est_energy;
  double err_energy = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double r = beta * estimate[i] - reference[i];
    err_energy += r * r;
  }
  return detail::ratio_db_capped(ref_energy, err_energy);
}

inline double si_sdr(const Waveform& estimate, const Waveform& reference) {
  return si_sdr(std::span<const double>(estimate.samples),
                std::span<const double>(reference.samples));
}

inline double sdr_scaled(const Waveform& estimate, const Waveform& reference) {
  return sdr_scaled(std::span<const double>(estimate.samples),
                    std::span<const double>(reference.samples));
}

}  // namespace gsep
