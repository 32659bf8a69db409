// src/wavio.cpp

// Copyright 2026 The scenesep Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scenesep/audio.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace scenesep {

namespace {

[[noreturn]] void wav_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("wav: " + path + ": " + what);
}

void put_u32(std::string& s, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  s.append(b, 4);
}

void put_u16(std::string& s, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  s.append(b, 2);
}

std::uint32_t get_u32(const char* p) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24);
}

std::uint16_t get_u16(const char* p) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                    (static_cast<unsigned char>(p[1]) << 8));
}

}  // namespace

void write_wav(const std::string& path, const AudioBuffer& audio) {
  if (audio.channels < 1 || audio.samples < 0)
    wav_fail(path, "invalid buffer geometry");
  const std::uint32_t n_frames = static_cast<std::uint32_t>(audio.samples);
  const std::uint16_t n_ch = static_cast<std::uint16_t>(audio.channels);
  const std::uint32_t data_bytes = n_frames * n_ch * 4u;

  std::string head;
  head.reserve(44);
  head += "RIFF";
  put_u32(head, 36u + data_bytes);
  head += "WAVE";
  head += "fmt ";
  put_u32(head, 16u);
  put_u16(head, 3u);  // IEEE float
  put_u16(head, n_ch);
  put_u32(head, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(head, static_cast<std::uint32_t>(audio.sample_rate) * n_ch * 4u);
  put_u16(head, static_cast<std::uint16_t>(n_ch * 4u));
  put_u16(head, 32u);
  head += "data";
  put_u32(head, data_bytes);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) wav_fail(path, "cannot open for writing");
  f.write(head.data(), static_cast<std::streamsize>(head.size()));

  // interleave
  std::vector<float> row(static_cast<std::size_t>(n_ch));
  for (std::uint32_t i = 0; i < n_frames; ++i) {
    for (std::uint16_t c = 0; c < n_ch; ++c) row[c] = audio.channel(c)[i];
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(sizeof(float) * n_ch));
  }
  if (!f) wav_fail(path, "write failed");
}

AudioBuffer read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) wav_fail(path, "cannot open");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < 44) wav_fail(path, "truncated header");
  if (bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    wav_fail(path, "not a RIFF/WAVE file");

  // walk chunks
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t n_ch = 0;
  std::uint32_t rate = 0;
  std::size_t data_pos = 0, data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t len = get_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + len > bytes.size()) wav_fail(path, "chunk '" + id + "' overruns file");
    if (id == "fmt ") {
      if (len < 16) wav_fail(path, "fmt chunk too short");
      const std::uint16_t format = get_u16(bytes.data() + pos);
      n_ch = get_u16(bytes.data() + pos + 2);
      rate = get_u32(bytes.data() + pos + 4);
      const std::uint16_t bits = get_u16(bytes.data() + pos + 14);
      if (format != 3 || bits != 32) wav_fail(path, "expected 32-bit IEEE float samples");
      have_fmt = true;
    } else if (id == "data") {
      data_pos = pos;
      data_len = len;
    }
    pos += len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt) wav_fail(path, "missing fmt chunk");
  if (data_pos == 0) wav_fail(path, "missing data chunk");
  if (n_ch == 0) wav_fail(path, "zero channels");
  if (data_len % (4u * n_ch) != 0) wav_fail(path, "data size not a whole number of frames");

  AudioBuffer out;
  out.sample_rate = static_cast<std::int32_t>(rate);
  out.channels = n_ch;
  out.samples = static_cast<std::int64_t>(data_len / (4u * n_ch));
  out.data.resize(static_cast<std::size_t>(out.channels * out.samples));
  const char* p = bytes.data() + data_pos;
  for (std::int64_t i = 0; i < out.samples; ++i)
    for (std::int64_t c = 0; c < out.channels; ++c) {
      float v;
      std::memcpy(&v, p + (i * n_ch + c) * 4, 4);
      out.channel(c)[i] = v;
    }
  return out;
}

}  // namespace scenesep
