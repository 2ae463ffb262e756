// gsep/wav.hpp

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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "gsep/dsp.hpp"

namespace gsep {

static_assert(std::endian::native == std::endian::little,
              "wav and checkpoint i/o assume a little-endian host");

namespace detail {

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t read_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

inline void write_u16(std::ostream& os, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

}  // namespace detail

/// Reads a RIFF/WAVE file: PCM 16-bit, mono. The sample rate must match
/// `expected_rate` unless it is 0. Samples map to [-1, 1) via /32768.
inline Waveform wav_read(const std::string& path, int expected_rate = 8000) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open wav file: " + path);

  char tag[4];
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "RIFF", 4) != 0) throw Error("not a RIFF file: " + path);
  detail::read_u32(is);  // riff size, unused
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "WAVE", 4) != 0) throw Error("not a WAVE file: " + path);

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  Waveform w;

  while (is.read(tag, 4)) {
    const std::uint32_t chunk_size = detail::read_u32(is);
    if (!is) break;
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = detail::read_u16(is);
      channels = detail::read_u16(is);
      rate = detail::read_u32(is);
      detail::read_u32(is);  // byte rate
      detail::read_u16(is);  // block align
      bits = detail::read_u16(is);
      if (chunk_size > 16) is.seekg(chunk_size - 16 + (chunk_size & 1), std::ios::cur);
      else if (chunk_size & 1) is.seekg(1, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw Error("wav data chunk before fmt chunk: " + path);
      if (format != 1) throw Error("unsupported wav format (PCM required): " + path);
      if (channels != 1) throw Error("unsupported channel count (mono required): " + path);
      if (bits != 16) throw Error("unsupported bit depth (16-bit required): " + path);
      if (expected_rate != 0 && rate != static_cast<std::uint32_t>(expected_rate))
        throw Error("unsupported sample rate " + std::to_string(rate) + " Hz (expected " +
                    std::to_string(expected_rate) + " Hz): " + path);
      const std::uint32_t count = chunk_size / 2;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(count);
      std::vector<std::int16_t> raw(count);
      is.read(reinterpret_cast<char*>(raw.data()), count * 2);
      if (!is) throw Error("truncated wav data chunk: " + path);
      for (std::uint32_t i = 0; i < count; ++i) w.samples[i] = raw[i] / 32768.0;
      return w;
    } else {
      is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  throw Error("no data chunk found in wav file: " + path);
}

/// Writes PCM 16-bit mono with round-to-nearest and clipping; the exact
/// inverse of wav_read up to quantization (max abs error 1/32768).
inline void wav_write(const std::string& path, const Waveform& w) {
  check_finite(w, "non-finite sample in wav_write");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot create wav file: " + path);

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  const std::uint32_t rate = static_cast<std::uint32_t>(w.sample_rate);
  os.write("RIFF", 4);
  detail::write_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  detail::write_u32(os, 16);
  detail::write_u16(os, 1);  // PCM
  detail::write_u16(os, 1);  // mono
  detail::write_u32(os, rate);
  detail::write_u32(os, rate * 2);
  detail::write_u16(os, 2);
  detail::write_u16(os, 16);
  os.write("data", 4);
  detail::write_u32(os, data_bytes);

  std::vector<std::int16_t> raw(w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double scaled = std::lround(w.samples[i] * 32768.0);
    raw[i] = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 2));
  if (!os) throw Error("short write to wav file: " + path);
}

}  // namespace gsep
