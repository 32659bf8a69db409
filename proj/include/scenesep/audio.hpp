// scenesep/audio.hpp

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

#ifndef SCENESEP_AUDIO_HPP_
#define SCENESEP_AUDIO_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace scenesep {

inline constexpr std::int64_t kMixChannels = 4;

/// Planar multichannel audio: row c holds channel c, row-major.
struct AudioBuffer {
  std::int32_t sample_rate = 16000;
  std::int64_t channels = 0;
  std::int64_t samples = 0;
  std::vector<float> data;  // channels * samples

  static AudioBuffer zeros(std::int64_t channels, std::int64_t samples,
                           std::int32_t sample_rate = 16000) {
    AudioBuffer b;
    b.sample_rate = sample_rate;
    b.channels = channels;
    b.samples = samples;
    b.data.assign(static_cast<std::size_t>(channels * samples), 0.0f);
    return b;
  }

  static AudioBuffer mono(std::vector<float> wave, std::int32_t sample_rate = 16000) {
    AudioBuffer b;
    b.sample_rate = sample_rate;
    b.channels = 1;
    b.samples = static_cast<std::int64_t>(wave.size());
    b.data = std::move(wave);
    return b;
  }

  float* channel(std::int64_t c) { return data.data() + c * samples; }
  const float* channel(std::int64_t c) const { return data.data() + c * samples; }

  std::vector<float> channel_vec(std::int64_t c) const {
    return std::vector<float>(channel(c), channel(c) + samples);
  }
};

/// Writes a RIFF/WAVE file, 32-bit IEEE float, little-endian, interleaved.
void write_wav(const std::string& path, const AudioBuffer& audio);

/// Reads a 32-bit float RIFF/WAVE file; any deviation from the written
/// format is rejected with a diagnostic naming the file.
AudioBuffer read_wav(const std::string& path);

}  // namespace scenesep

#endif  // SCENESEP_AUDIO_HPP_
