// gsep/dataset.hpp

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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsep/common.hpp"
#include "gsep/mixture.hpp"
#include "gsep/synth.hpp"
#include "gsep/wav.hpp"

namespace gsep {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Generation protocol for one dataset split.
struct MixProtocol {
  double snr_min_db = 0.0;
  double snr_max_db = 5.0;
  double anchor_len_s = 1.0;
  double anchor_jitter_s = 0.0;  // anchor length drawn in +-jitter around anchor_len_s
  double target_dur_min_s = 1.2;
  double target_dur_max_s = 2.2;
};

/// A speaker pool the generator can draw utterances from: either synthetic
/// profiles or a directory of real recordings.
class UtterancePool {
 public:
  struct Speaker {
    std::string id;
    Gender gender = Gender::F;
    // synthetic mode
    std::optional<SpeakerProfile> profile;
    // corpus mode
    std::vector<std::string> utterance_paths;
  };

  static UtterancePool from_profiles(const std::vector<SpeakerProfile>& profiles) {
    UtterancePool pool;
    pool.synthetic_ = true;
    for (const auto& p : profiles) {
      p.validate();
      pool.speakers_.push_back({p.speaker_id, p.gender, p, {}});
    }
    if (pool.speakers_.size() < 2) throw ValidationError("need >= 2 speaker profiles");
    return pool;
  }

  /// Corpus layout: corpus/<speaker_id>/<utt>.wav plus a speakers.tsv mapping
  /// speaker_id to F or M, one pair per line.
  static UtterancePool from_corpus(const std::string& corpus_dir, const std::string& speakers_tsv) {
    UtterancePool pool;
    std::ifstream tsv(speakers_tsv);
    if (!tsv) throw ValidationError("cannot open speakers file: " + speakers_tsv);
    std::map<std::string, Gender> genders;
    std::string line;
    while (std::getline(tsv, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string id, g;
      if (!(ss >> id >> g)) throw ValidationError("malformed speakers line: " + line);
      genders[id] = gender_from_name(g);
    }
    if (!fs::is_directory(corpus_dir))
      throw ValidationError("corpus directory not found: " + corpus_dir);
    std::vector<fs::path> speaker_dirs;
    for (const auto& e : fs::directory_iterator(corpus_dir))
      if (e.is_directory()) speaker_dirs.push_back(e.path());
    std::sort(speaker_dirs.begin(), speaker_dirs.end());
    for (const auto& dir : speaker_dirs) {
      Speaker spk;
      spk.id = dir.filename().string();
      auto it = genders.find(spk.id);
      if (it == genders.end())
        throw ValidationError("speaker " + spk.id + " missing from " + speakers_tsv);
      spk.gender = it->second;
      for (const auto& f : fs::directory_iterator(dir))
        if (f.path().extension() == ".wav") spk.utterance_paths.push_back(f.path().string());
      std::sort(spk.utterance_paths.begin(), spk.utterance_paths.end());
      if (spk.utterance_paths.size() < 2)
        throw ValidationError("speaker " + spk.id +
                              " needs >= 2 utterances (anchor must differ from target)");
      pool.speakers_.push_back(std::move(spk));
    }
    if (pool.speakers_.size() < 2) throw ValidationError("corpus needs >= 2 speakers");
    return pool;
  }

  const std::vector<Speaker>& speakers() const { return speakers_; }
  bool synthetic() const { return synthetic_; }

 private:
  bool synthetic_ = false;
  std::vector<Speaker> speakers_;
};

/// Deterministic speaker partition: within each gender, speakers are ordered
/// by id and the "inner" half (middle of the list) goes to test so that test
/// identities interpolate, rather than extrapolate, the training pool.
struct SpeakerSplit {
  std::vector<int> train_valid;  // indices into pool.speakers()
  std::vector<int> test;
};

inline SpeakerSplit split_speakers(const UtterancePool& pool) {
  SpeakerSplit split;
  for (Gender g : {Gender::F, Gender::M}) {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(pool.speakers().size()); ++i)
      if (pool.speakers()[static_cast<std::size_t>(i)].gender == g) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return pool.speakers()[static_cast<std::size_t>(a)].id <
             pool.speakers()[static_cast<std::size_t>(b)].id;
    });
    const int n = static_cast<int>(idx.size());
    const int n_test = n / 2;
    const int first_test = (n - n_test + 1) / 2;  // centered block
    for (int j = 0; j < n; ++j) {
      if (j >= first_test && j < first_test + n_test)
        split.test.push_back(idx[static_cast<std::size_t>(j)]);
      else
        split.train_valid.push_back(idx[static_cast<std::size_t>(j)]);
    }
  }
  if (split.train_valid.empty() || split.test.empty())
    throw ValidationError("need at least 2 speakers to form disjoint train/test pools");
  return split;
}

inline std::string gender_pair_label(Gender target, Gender interf) {
  if (target != interf) return "F&M";
  return target == Gender::F ? "F&F" : "M&M";
}

// ---------------------------------------------------------------------------
// Manifest serialization: one JSON object per line.
// ---------------------------------------------------------------------------

inline json to_json(const MixtureSpec& m) {
  return json{{"id", m.id},
              {"target_wav", m.target_wav},
              {"anchor_wav", m.anchor_wav},
              {"interf_wav", m.interf_wav},
              {"mix_wav", m.mix_wav},
              {"snr_db", m.snr_db},
              {"anchor_len_s", m.anchor_len_s},
              {"gender_pair", m.gender_pair},
              {"split", m.split},
              {"seed", m.seed}};
}

inline MixtureSpec mixture_spec_from_json(const json& j) {
  MixtureSpec m;
  m.id = j.at("id").get<std::string>();
  m.target_wav = j.at("target_wav").get<std::string>();
  m.anchor_wav = j.at("anchor_wav").get<std::string>();
  m.interf_wav = j.at("interf_wav").get<std::string>();
  m.mix_wav = j.at("mix_wav").get<std::string>();
  m.snr_db = j.at("snr_db").get<double>();
  m.anchor_len_s = j.at("anchor_len_s").get<double>();
  m.gender_pair = j.at("gender_pair").get<std::string>();
  m.split = j.at("split").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

inline void write_manifest(const std::string& path, const std::vector<MixtureSpec>& specs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot create manifest: " + path);
  for (const auto& m : specs) os << to_json(m).dump() << "\n";
}

inline std::vector<MixtureSpec> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest: " + path);
  std::vector<MixtureSpec> specs;
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      specs.push_back(mixture_spec_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error("manifest " + path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return specs;
}

inline std::string hash_file_hex(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open file for hashing: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  const std::string bytes = ss.str();
  return to_hex(fnv1a64(bytes.data(), bytes.size()));
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace detail {

/// Extracts a deterministic anchor-length cut from a real utterance.
inline Waveform cut_anchor(const Waveform& utt, double anchor_len_s, Rng& rng) {
  const long want = std::lround(anchor_len_s * utt.sample_rate);
  if (utt.size() <= want) return utt;
  const long offset = static_cast<long>(uniform_index(rng, static_cast<std::uint64_t>(utt.size() - want + 1)));
  Waveform out;
  out.sample_rate = utt.sample_rate;
  out.samples.assign(utt.samples.begin() + offset, utt.samples.begin() + offset + want);
  return out;
}

struct DrawnMixture {
  Waveform anchor, target, interference;
  int target_speaker = 0, interf_speaker = 0;
  double snr_db = 0.0;
  double anchor_len_s = 1.0;
};

/// All random choices for mixture `index` come from one seeded stream, so a
/// manifest is reproducible from (seed, split, index) alone.
inline DrawnMixture draw_mixture(const UtterancePool& pool, const std::vector<int>& speaker_idx,
                                 const MixProtocol& proto, std::uint64_t mixture_seed) {
  Rng rng(mixture_seed);
  DrawnMixture d;
  d.target_speaker = speaker_idx[static_cast<std::size_t>(
      uniform_index(rng, speaker_idx.size()))];
  do {
    d.interf_speaker = speaker_idx[static_cast<std::size_t>(
        uniform_index(rng, speaker_idx.size()))];
  } while (d.interf_speaker == d.target_speaker);
  d.snr_db = uniform(rng, proto.snr_min_db, proto.snr_max_db);
  d.anchor_len_s = proto.anchor_len_s;
  if (proto.anchor_jitter_s > 0.0)
    d.anchor_len_s += uniform(rng, -proto.anchor_jitter_s, proto.anchor_jitter_s);
  d.anchor_len_s = std::max(d.anchor_len_s, 0.25);

  const auto& tgt = pool.speakers()[static_cast<std::size_t>(d.target_speaker)];
  const auto& itf = pool.speakers()[static_cast<std::size_t>(d.interf_speaker)];
  if (pool.synthetic()) {
    const double target_dur = uniform(rng, proto.target_dur_min_s, proto.target_dur_max_s);
    const double interf_dur = uniform(rng, proto.target_dur_min_s, proto.target_dur_max_s);
    const std::uint64_t target_seed = rng();
    const std::uint64_t anchor_seed = rng();  // distinct utterance of the same speaker
    const std::uint64_t interf_seed = rng();
    d.target = synth_utterance(tgt.profile.value(), target_dur, target_seed);
    d.anchor = synth_utterance(tgt.profile.value(), d.anchor_len_s, anchor_seed);
    d.interference = synth_utterance(itf.profile.value(), interf_dur, interf_seed);
  } else {
    const auto pick = [&](const std::vector<std::string>& utts, std::optional<std::size_t> avoid) {
      std::size_t i;
      do {
        i = static_cast<std::size_t>(uniform_index(rng, utts.size()));
      } while (avoid && i == *avoid && utts.size() > 1);
      return i;
    };
    const std::size_t target_utt = pick(tgt.utterance_paths, std::nullopt);
    const std::size_t anchor_utt = pick(tgt.utterance_paths, target_utt);
    const std::size_t interf_utt = pick(itf.utterance_paths, std::nullopt);
    d.target = wav_read(tgt.utterance_paths[target_utt]);
    d.anchor = cut_anchor(wav_read(tgt.utterance_paths[anchor_utt]), d.anchor_len_s, rng);
    d.interference = wav_read(itf.utterance_paths[interf_utt]);
    d.anchor_len_s = d.anchor.duration_s();
  }
  return d;
}

}  // namespace detail

struct GeneratedSplit {
  std::vector<MixtureSpec> manifest;
  std::string manifest_path;
  std::map<std::string, int> stratum_counts;
};

/// Generates `count` mixtures for one split, writes the four wavs per mixture
/// under <workdir>/wav/<split>/ and the manifest at <workdir>/<split>.jsonl.
/// Deterministic in (pool, protocol, seed); mixtures are independent, so
/// materialization fans out across `jobs` threads.
inline GeneratedSplit dataset_generate(const UtterancePool& pool, const SpeakerSplit& split,
                                       const std::string& split_name, int count,
                                       const MixProtocol& proto, std::uint64_t seed,
                                       const std::string& workdir, int jobs = 1) {
  if (count <= 0) throw ValidationError("mixture count must be positive");
  const std::vector<int>& speaker_idx =
      split_name == "test" ? split.test : split.train_valid;
  if (speaker_idx.size() < 2)
    throw ValidationError("split '" + split_name + "' needs >= 2 speakers, has " +
                          std::to_string(speaker_idx.size()));

  const fs::path wav_dir = fs::path(workdir) / "wav" / split_name;
  fs::create_directories(wav_dir);

  GeneratedSplit out;
  out.manifest.resize(static_cast<std::size_t>(count));
  const std::uint64_t split_salt = fnv1a64(split_name.data(), split_name.size());

  parallel_for(static_cast<std::size_t>(count), jobs, [&](std::size_t i) {
    const std::uint64_t mixture_seed = mix_seed(seed ^ split_salt, i);
    auto d = detail::draw_mixture(pool, speaker_idx, proto, mixture_seed);
    auto parts = build_mixture(d.anchor, d.target, d.interference, d.snr_db);

    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "%s-%05zu", split_name.c_str(), i);
    MixtureSpec spec;
    spec.id = idbuf;
    spec.snr_db = d.snr_db;
    spec.anchor_len_s = d.anchor_len_s;
    spec.gender_pair =
        gender_pair_label(pool.speakers()[static_cast<std::size_t>(d.target_speaker)].gender,
                          pool.speakers()[static_cast<std::size_t>(d.interf_speaker)].gender);
    spec.split = split_name;
    spec.seed = mixture_seed;

    const long A = parts.anchor_samples;
    Waveform anchor_w, target_w, interf_w;
    anchor_w.sample_rate = target_w.sample_rate = interf_w.sample_rate = parts.mixture.sample_rate;
    anchor_w.samples.assign(parts.target_ref.samples.begin(),
                            parts.target_ref.samples.begin() + A);
    target_w.samples.assign(parts.target_ref.samples.begin() + A, parts.target_ref.samples.end());
    interf_w.samples.assign(parts.interference.samples.begin() + A,
                            parts.interference.samples.end());

    const std::string stem = std::string("wav/") + split_name + "/" + spec.id;
    spec.anchor_wav = stem + "_anchor.wav";
    spec.target_wav = stem + "_target.wav";
    spec.interf_wav = stem + "_interf.wav";
    spec.mix_wav = stem + "_mix.wav";
    wav_write((fs::path(workdir) / spec.anchor_wav).string(), anchor_w);
    wav_write((fs::path(workdir) / spec.target_wav).string(), target_w);
    wav_write((fs::path(workdir) / spec.interf_wav).string(), interf_w);
    wav_write((fs::path(workdir) / spec.mix_wav).string(), parts.mixture);
    out.manifest[i] = std::move(spec);
  });

  for (const auto& m : out.manifest) out.stratum_counts[m.gender_pair]++;
  out.manifest_path = (fs::path(workdir) / (split_name + ".jsonl")).string();
  write_manifest(out.manifest_path, out.manifest);
  return out;
}

/// Re-materializes the (y, s_t) pair of a manifest record.
struct LoadedMixture {
  Waveform mixture;     // y, anchor-prefixed
  Waveform target_ref;  // s_t, anchor-prefixed
  Waveform target_only; // post-anchor target
  long anchor_samples = 0;
};

inline LoadedMixture load_mixture(const MixtureSpec& spec, const std::string& base_dir) {
  LoadedMixture lm;
  const auto resolve = [&](const std::string& rel) {
    return (fs::path(base_dir) / rel).string();
  };
  lm.mixture = wav_read(resolve(spec.mix_wav));
  Waveform anchor = wav_read(resolve(spec.anchor_wav));
  lm.target_only = wav_read(resolve(spec.target_wav));
  lm.anchor_samples = anchor.size();
  lm.target_ref.sample_rate = lm.mixture.sample_rate;
  lm.target_ref.samples = anchor.samples;
  lm.target_ref.samples.insert(lm.target_ref.samples.end(), lm.target_only.samples.begin(),
                               lm.target_only.samples.end());
  if (lm.target_ref.size() != lm.mixture.size())
    throw Error("manifest wavs inconsistent for " + spec.id + ": anchor+target length " +
                std::to_string(lm.target_ref.size()) + " vs mixture " +
                std::to_string(lm.mixture.size()));
  return lm;
}

}  // namespace gsep
