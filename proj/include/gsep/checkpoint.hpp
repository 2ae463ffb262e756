// gsep/checkpoint.hpp

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

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsep/adam.hpp"
#include "gsep/network.hpp"
#include "gsep/wav.hpp"  // little-endian static_assert

namespace gsep {

// Checkpoint layout:
//   bytes 0..3   magic "GSEP"
//   bytes 4..7   format version, u32 little-endian (currently 1)
//   UTF-8 JSON header: arch metadata, optimizer metadata, tensor manifest
//                      [{name, shape, dtype, offset}, ...]
//   raw little-endian tensor payloads in manifest order; offsets are relative
//   to the first byte after the JSON header. Matrices serialize row-major.
constexpr std::uint32_t kCheckpointVersion = 1;

template <class S>
constexpr const char* dtype_name() {
  if constexpr (sizeof(S) == 4) return "f32";
  else return "f64";
}

inline nlohmann::json stft_to_json(const StftConfig& c) {
  return {{"window_len", c.window_len},
          {"hop", c.hop},
          {"fft_size", c.fft_size},
          {"window", window_name(c.window_kind)}};
}

inline StftConfig stft_from_json(const nlohmann::json& j) {
  StftConfig c;
  c.window_len = j.at("window_len").get<int>();
  c.hop = j.at("hop").get<int>();
  c.fft_size = j.at("fft_size").get<int>();
  c.window_kind = window_from_name(j.at("window").get<std::string>());
  return c;
}

inline nlohmann::json arch_to_json(const ArchMeta& a) {
  return {{"input_dim", a.input_dim},   {"lstm_hidden", a.lstm_hidden},
          {"fc_hidden", a.fc_hidden},   {"output_dim", a.output_dim},
          {"dropout", a.dropout},       {"loss_mode", a.loss_mode},
          {"stft", stft_to_json(a.stft)}};
}

inline ArchMeta arch_from_json(const nlohmann::json& j) {
  ArchMeta a;
  a.input_dim = j.at("input_dim").get<int>();
  a.lstm_hidden = j.at("lstm_hidden").get<std::vector<int>>();
  a.fc_hidden = j.at("fc_hidden").get<int>();
  a.output_dim = j.at("output_dim").get<int>();
  a.dropout = j.at("dropout").get<double>();
  a.loss_mode = j.at("loss_mode").get<std::string>();
  a.stft = stft_from_json(j.at("stft"));
  return a;
}

namespace detail {

// Row-major serialization keeps the payload independent of Eigen's internal
// storage order.
template <class T>
void append_tensor_bytes(std::string& out, const T& t) {
  using Scalar = typename T::Scalar;
  const std::size_t base = out.size();
  out.resize(base + static_cast<std::size_t>(t.size()) * sizeof(Scalar));
  char* dst = out.data() + base;
  for (long r = 0; r < t.rows(); ++r)
    for (long c = 0; c < t.cols(); ++c) {
      std::memcpy(dst, &t(r, c), sizeof(Scalar));
      dst += sizeof(Scalar);
    }
}

template <class T>
void read_tensor_bytes(const std::string& payload, std::size_t offset, T& t,
                       const std::string& name) {
  using Scalar = typename T::Scalar;
  const std::size_t need = static_cast<std::size_t>(t.size()) * sizeof(Scalar);
  if (offset + need > payload.size())
    throw Error("corrupt checkpoint (truncated tensor " + name + ")");
  const char* src = payload.data() + offset;
  for (long r = 0; r < t.rows(); ++r)
    for (long c = 0; c < t.cols(); ++c) {
      Scalar v;
      std::memcpy(&v, src, sizeof(Scalar));
      t(r, c) = v;
      src += sizeof(Scalar);
    }
}

inline nlohmann::json manifest_entry(const std::string& name, long rows, long cols,
                                     const char* dtype, std::size_t offset) {
  return {{"name", name},
          {"shape", nlohmann::json::array({rows, cols})},
          {"dtype", dtype},
          {"offset", offset}};
}

}  // namespace detail

template <class S>
void save_checkpoint(const NetworkParams<S>& params, const std::string& path,
                     const AdamState<S>* opt = nullptr, const AdamConfig* opt_cfg = nullptr) {
  nlohmann::json manifest = nlohmann::json::array();
  std::string payload;

  const auto add = [&](const std::string& name, const auto& t, const char* dtype) {
    manifest.push_back(detail::manifest_entry(name, t.rows(), t.cols(), dtype, payload.size()));
    detail::append_tensor_bytes(payload, t);
  };

  visit_tensors([&](const std::string& name, const auto& t) { add(name, t, dtype_name<S>()); },
                params);
  add("norm.mean", params.norm_stats.mean, "f64");
  add("norm.std", params.norm_stats.std, "f64");
  if (opt) {
    visit_tensors([&](const std::string& name, const auto& t) { add("adam.m." + name, t, dtype_name<S>()); },
                  opt->m);
    visit_tensors([&](const std::string& name, const auto& t) { add("adam.v." + name, t, dtype_name<S>()); },
                  opt->v);
  }

  nlohmann::json header{{"arch", arch_to_json(params.arch_meta)},
                        {"dtype", dtype_name<S>()},
                        {"tensors", manifest}};
  if (opt) {
    nlohmann::json optim{{"step_count", opt->step_count}};
    if (opt_cfg)
      optim.update({{"lr", opt_cfg->lr},
                    {"beta1", opt_cfg->beta1},
                    {"beta2", opt_cfg->beta2},
                    {"eps", opt_cfg->eps}});
    header["optim"] = optim;
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot create checkpoint: " + path);
  os.write("GSEP", 4);
  detail::write_u32(os, kCheckpointVersion);
  const std::string header_str = header.dump();
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!os) throw Error("short write to checkpoint: " + path);
}

/// Parses header and payload; `opt_out`, when given, receives the optimizer
/// state if the checkpoint carries one (flag reported via return of
/// checkpoint_has_optimizer_state).
template <class S>
NetworkParams<S> load_checkpoint(const std::string& path, AdamState<S>* opt_out = nullptr,
                                 long* step_count_out = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint: " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GSEP", 4) != 0)
    throw Error("not a gsep checkpoint: " + path);
  const std::uint32_t version = detail::read_u32(is);
  if (!is) throw Error("corrupt checkpoint (truncated header): " + path);
  if (version != kCheckpointVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                std::to_string(kCheckpointVersion) + "): " + path);

  nlohmann::json header;
  try {
    is >> header;  // consumes exactly one JSON document
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt checkpoint (bad header): " + path + ": " + e.what());
  }
  std::string payload;
  {
    std::ostringstream rest;
    rest << is.rdbuf();
    payload = rest.str();
  }

  NetworkParams<S> params;
  params.arch_meta = arch_from_json(header.at("arch"));
  params.arch_meta.validate();
  static_cast<NetTensors<S>&>(params) = NetTensors<S>::zeros(params.arch_meta);
  params.norm_stats.mean = Vec::Zero(params.arch_meta.input_dim);
  params.norm_stats.std = Vec::Ones(params.arch_meta.input_dim);

  const std::string file_dtype = header.value("dtype", "f32");
  if (file_dtype != dtype_name<S>())
    throw Error("checkpoint dtype " + file_dtype + " does not match requested " +
                dtype_name<S>() + ": " + path);

  std::map<std::string, nlohmann::json> entries;
  for (const auto& e : header.at("tensors")) entries[e.at("name").get<std::string>()] = e;

  const auto load_one = [&](const std::string& name, auto& t, const char* dtype) {
    auto it = entries.find(name);
    if (it == entries.end()) throw Error("corrupt checkpoint (missing tensor " + name + ")");
    const auto& e = it->second;
    if (e.at("dtype").get<std::string>() != dtype)
      throw Error("checkpoint tensor " + name + " has dtype " +
                  e.at("dtype").get<std::string>() + ", expected " + dtype);
    const auto shape = e.at("shape");
    const long rows = shape.at(0).get<long>();
    const long cols = shape.size() > 1 ? shape.at(1).get<long>() : 1;
    if (rows != t.rows() || cols != t.cols())
      throw Error("checkpoint tensor " + name + " has unexpected shape");
    detail::read_tensor_bytes(payload, e.at("offset").get<std::size_t>(), t, name);
  };

  visit_tensors([&](const std::string& name, auto& t) { load_one(name, t, dtype_name<S>()); },
                params);
  load_one("norm.mean", params.norm_stats.mean, "f64");
  load_one("norm.std", params.norm_stats.std, "f64");

  if (header.contains("optim") && step_count_out)
    *step_count_out = header["optim"].value("step_count", 0L);
  if (opt_out) {
    *opt_out = AdamState<S>::zeros(params.arch_meta);
    if (header.contains("optim")) {
      opt_out->step_count = header["optim"].value("step_count", 0L);
      if (entries.count("adam.m.lstm0.W_ii") > 0) {
        visit_tensors(
            [&](const std::string& name, auto& t) { load_one("adam.m." + name, t, dtype_name<S>()); },
            opt_out->m);
        visit_tensors(
            [&](const std::string& name, auto& t) { load_one("adam.v." + name, t, dtype_name<S>()); },
            opt_out->v);
      }
    }
  }
  return params;
}

/// Peeks at the stored dtype ("f32"/"f64") without loading tensors.
inline std::string checkpoint_dtype(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GSEP", 4) != 0) throw Error("not a gsep checkpoint: " + path);
  detail::read_u32(is);
  nlohmann::json header;
  try {
    is >> header;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt checkpoint (bad header): " + path + ": " + e.what());
  }
  return header.value("dtype", "f32");
}

}  // namespace gsep
