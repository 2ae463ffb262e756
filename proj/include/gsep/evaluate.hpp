// gsep/evaluate.hpp

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

#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gsep/dataset.hpp"
#include "gsep/metrics.hpp"
#include "gsep/network.hpp"

namespace gsep {

enum class Region { full, post_anchor, part1, part2 };

inline std::string region_name(Region r) {
  switch (r) {
    case Region::full: return "full";
    case Region::post_anchor: return "post_anchor";
    case Region::part1: return "part1";
    case Region::part2: return "part2";
  }
  return "?";
}

inline Region region_from_name(const std::string& s) {
  if (s == "full") return Region::full;
  if (s == "post_anchor") return Region::post_anchor;
  if (s == "part1") return Region::part1;
  if (s == "part2") return Region::part2;
  throw ValidationError("unknown region: " + s + " (full|post_anchor|part1|part2)");
}

enum class EvalMode { network, oracle, identity };

inline std::string eval_mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::network: return "network";
    case EvalMode::oracle: return "oracle";
    case EvalMode::identity: return "identity";
  }
  return "?";
}

struct ScoreRow {
  std::string id;
  std::string gender_pair;
  double si_sdr_db = 0.0;
  double sdr_db = 0.0;
  double si_sdr_unprocessed_db = 0.0;
  bool ok = true;
  std::string error;
};

struct StratumStats {
  int count = 0;
  double mean_si_sdr_db = 0.0;
  double mean_sdr_db = 0.0;
  double mean_unprocessed_db = 0.0;
  double mean_improvement_db = 0.0;
};

struct ScoreReport {
  std::vector<ScoreRow> rows;
  std::map<std::string, StratumStats> by_pair;
  StratumStats overall;
  nlohmann::json metadata;

  bool all_ok() const {
    for (const auto& r : rows)
      if (!r.ok) return false;
    return true;
  }
};

namespace detail {

/// [begin, end) sample range of a scoring region. part1/part2 partition the
/// post-anchor span exactly.
inline std::pair<long, long> region_bounds(Region region, long anchor_samples, long total) {
  const long a = anchor_samples;
  const long half = a + (total - a) / 2;
  switch (region) {
    case Region::full: return {0, total};
    case Region::post_anchor: return {a, total};
    case Region::part1: return {a, half};
    case Region::part2: return {half, total};
  }
  return {0, total};
}

inline std::span<const double> slice(const Waveform& w, std::pair<long, long> b) {
  return std::span<const double>(w.samples.data() + b.first,
                                 static_cast<std::size_t>(b.second - b.first));
}

inline void finalize_stats(StratumStats& s) {
  if (s.count == 0) return;
  s.mean_si_sdr_db /= s.count;
  s.mean_sdr_db /= s.count;
  s.mean_unprocessed_db /= s.count;
  s.mean_improvement_db = s.mean_si_sdr_db - s.mean_unprocessed_db;
}

}  // namespace detail

/// Scores one separated estimate against the reference on a region of an
/// anchor-prefixed pair.
struct UtteranceScore {
  double si_sdr_db, sdr_db, si_sdr_unprocessed_db;
};

inline UtteranceScore score_region(const Waveform& estimate, const Waveform& mixture,
                                   const Waveform& target_ref, long anchor_samples,
                                   Region region) {
  const auto bounds = detail::region_bounds(region, anchor_samples, mixture.size());
  if (bounds.second <= bounds.first) throw Error("empty scoring region");
  UtteranceScore s{};
  s.si_sdr_db = si_sdr(detail::slice(estimate, bounds), detail::slice(target_ref, bounds));
  s.sdr_db = sdr_scaled(detail::slice(estimate, bounds), detail::slice(target_ref, bounds));
  s.si_sdr_unprocessed_db =
      si_sdr(detail::slice(mixture, bounds), detail::slice(target_ref, bounds));
  return s;
}

/// Runs the separator (or an oracle/identity mask) over a test manifest and
/// aggregates SI-SDR / scaled-SDR means, stratified by gender pairing.
/// Per-row failures are recorded and the run continues.
template <class S>
ScoreReport evaluate(const NetworkParams<S>& params, const std::vector<MixtureSpec>& manifest,
                     const std::string& base_dir, Region region = Region::post_anchor,
                     EvalMode mode = EvalMode::network, int jobs = 1) {
  const StftConfig& cfg = params.arch_meta.stft;
  if (params.arch_meta.input_dim != cfg.bins())
    throw ValidationError("checkpoint architecture inconsistent with its stft config");

  ScoreReport report;
  report.rows.resize(manifest.size());

  parallel_for(manifest.size(), jobs, [&](std::size_t idx) {
    const auto& spec = manifest[idx];
    ScoreRow row;
    row.id = spec.id;
    row.gender_pair = spec.gender_pair;
    try {
      auto lm = load_mixture(spec, base_dir);
      auto mix_spec = stft(lm.mixture, cfg);

      MaskSequence mask;
      switch (mode) {
        case EvalMode::network: {
          auto feats = normalize(compress_magnitude(mix_spec), params.norm_stats);
          mask = forward(feats, params);
          break;
        }
        case EvalMode::oracle:
          mask = psm(stft(lm.target_ref, cfg), mix_spec);
          break;
        case EvalMode::identity:
          mask = MaskSequence{Mat::Ones(mix_spec.num_frames(), mix_spec.num_bins()),
                              MaskKind::estimate};
          break;
      }
      auto estimate = apply_mask_resynth(mask, mix_spec);
      auto score = score_region(estimate, lm.mixture, lm.target_ref, lm.anchor_samples, region);
      row.si_sdr_db = score.si_sdr_db;
      row.sdr_db = score.sdr_db;
      row.si_sdr_unprocessed_db = score.si_sdr_unprocessed_db;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    report.rows[idx] = std::move(row);
  });

  for (const auto& row : report.rows) {
    if (!row.ok) continue;
    for (auto* stats : {&report.overall, &report.by_pair[row.gender_pair]}) {
      stats->count += 1;
      stats->mean_si_sdr_db += row.si_sdr_db;
      stats->mean_sdr_db += row.sdr_db;
      stats->mean_unprocessed_db += row.si_sdr_unprocessed_db;
    }
  }
  detail::finalize_stats(report.overall);
  for (auto& [pair, stats] : report.by_pair) detail::finalize_stats(stats);

  report.metadata = {{"region", region_name(region)},
                     {"mode", eval_mode_name(mode)},
                     {"rows", manifest.size()},
                     {"metrics",
                      "si_sdr and optimally scaled sdr; bss-eval sdr and pesq not included"}};
  return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json stats_to_json(const StratumStats& s) {
  return {{"count", s.count},
          {"mean_si_sdr_db", s.mean_si_sdr_db},
          {"mean_sdr_db", s.mean_sdr_db},
          {"mean_si_sdr_unprocessed_db", s.mean_unprocessed_db},
          {"mean_si_sdr_improvement_db", s.mean_improvement_db}};
}

inline void write_report_rows(const ScoreReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot create report: " + path);
  for (const auto& r : report.rows) {
    nlohmann::json j{{"id", r.id},
                     {"gender_pair", r.gender_pair},
                     {"si_sdr_db", r.si_sdr_db},
                     {"sdr_db", r.sdr_db},
                     {"si_sdr_unprocessed_db", r.si_sdr_unprocessed_db},
                     {"ok", r.ok}};
    if (!r.ok) j["error"] = r.error;
    os << j.dump() << "\n";
  }
}

inline nlohmann::json summary_to_json(const ScoreReport& report) {
  nlohmann::json by_pair = nlohmann::json::object();
  for (const auto& [pair, stats] : report.by_pair) by_pair[pair] = stats_to_json(stats);
  return {{"overall", stats_to_json(report.overall)},
          {"by_pair", by_pair},
          {"metadata", report.metadata}};
}

/// Plain-text table in the layout of per-pairing score tables.
inline std::string format_score_table(const ScoreReport& report, const std::string& metric_title) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << metric_title << "\n";
  os << std::left << std::setw(14) << "" << std::right;
  const std::vector<std::string> pairs = {"F&M", "F&F", "M&M"};
  for (const auto& p : pairs) os << std::setw(8) << p;
  os << std::setw(10) << "Average" << "\n";
  const auto line = [&](const char* label, auto pick) {
    os << std::left << std::setw(14) << label << std::right;
    for (const auto& p : pairs) {
      auto it = report.by_pair.find(p);
      if (it == report.by_pair.end() || it->second.count == 0) os << std::setw(8) << "-";
      else os << std::setw(8) << pick(it->second);
    }
    os << std::setw(10) << pick(report.overall) << "\n";
  };
  line("unprocessed", [](const StratumStats& s) { return s.mean_unprocessed_db; });
  line("separated", [](const StratumStats& s) { return s.mean_si_sdr_db; });
  return os.str();
}

// ---------------------------------------------------------------------------
// Guide-length sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  double anchor_len_s = 0.0;
  StratumStats overall;
  std::map<std::string, StratumStats> by_pair;
};

/// Generates matched test sets that differ only in anchor length and scores
/// each one post-anchor. Same seed, same speakers, same snr draws.
template <class S>
std::vector<SweepRow> guide_length_sweep(const NetworkParams<S>& params,
                                         const UtterancePool& pool, const SpeakerSplit& split,
                                         const MixProtocol& base_proto, int count,
                                         const std::vector<double>& lengths, std::uint64_t seed,
                                         const std::string& workdir, int jobs = 1) {
  if (lengths.empty()) throw ValidationError("sweep needs at least one anchor length");
  for (double l : lengths)
    if (l <= 0.0) throw ValidationError("sweep anchor lengths must be positive");

  std::vector<SweepRow> rows;
  for (double len : lengths) {
    MixProtocol proto = base_proto;
    proto.anchor_len_s = len;
    proto.anchor_jitter_s = 0.0;  // exact lengths; the draws stay matched
    std::ostringstream dir;
    dir << workdir << "/sweep_" << std::fixed << std::setprecision(2) << len;
    std::filesystem::create_directories(dir.str());
    auto gen = dataset_generate(pool, split, "test", count, proto, seed, dir.str(), jobs);
    auto report = evaluate(params, gen.manifest, dir.str(), Region::post_anchor,
                           EvalMode::network, jobs);
    if (!report.all_ok()) throw Error("sweep evaluation failed for anchor length " +
                                      std::to_string(len));
    SweepRow row;
    row.anchor_len_s = len;
    row.overall = report.overall;
    row.by_pair = report.by_pair;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json by_pair = nlohmann::json::object();
    for (const auto& [pair, stats] : r.by_pair) by_pair[pair] = stats_to_json(stats);
    out.push_back({{"anchor_len_s", r.anchor_len_s},
                   {"overall", stats_to_json(r.overall)},
                   {"by_pair", by_pair}});
  }
  return out;
}

inline std::string format_sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(10) << "anchor_s" << std::right;
  for (const char* p : {"F&M", "F&F", "M&M"}) os << std::setw(8) << p;
  os << std::setw(10) << "Average" << "\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << r.anchor_len_s << std::right;
    for (const char* p : {"F&M", "F&F", "M&M"}) {
      auto it = r.by_pair.find(p);
      if (it == r.by_pair.end() || it->second.count == 0) os << std::setw(8) << "-";
      else os << std::setw(8) << it->second.mean_si_sdr_db;
    }
    os << std::setw(10) << r.overall.mean_si_sdr_db << "\n";
  }
  return os.str();
}

}  // namespace gsep
