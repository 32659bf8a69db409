// scenesep/synth.hpp

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

#ifndef SCENESEP_SYNTH_HPP_
#define SCENESEP_SYNTH_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "scenesep/audio.hpp"
#include "scenesep/rng.hpp"

namespace scenesep {

inline constexpr int kNumClasses = 18;
inline constexpr int kInterferenceClass = 18;  // out-of-vocabulary signature

/// Class fundamental in Hz: log-spaced, one sixth of an octave per class.
inline double class_f0(int class_id) { return 110.0 * std::pow(2.0, class_id / 6.0); }

struct SceneSpec {
  std::int32_t sample_rate = 16000;
  double duration = 2.0;
  std::vector<int> class_ids;     // 1..3 distinct ids in 0..17
  std::vector<double> fg_snr_db;  // one per class id, in [-5, 10]
  bool interference_present = false;
  double noise_floor_db = -30.0;  // RMS in dBFS; <= -200 disables noise injection
  std::uint64_t seed = 0;

  std::int64_t samples() const {
    return static_cast<std::int64_t>(duration * sample_rate + 0.5);
  }
};

struct Scene {
  AudioBuffer mixture;  // [4, N]
  /// Channel-0 images of the scaled foreground sources (class id, waveform).
  std::vector<std::pair<int, std::vector<float>>> fg_refs;
  std::vector<float> interference;  // channel-0 image; empty when absent
  AudioBuffer noise;                // [4, N]; zeros when disabled
  /// Full spatialized 4-channel parts, foregrounds first, interference last
  /// when present; mixture equals their float sum plus noise, sample-exact.
  std::vector<AudioBuffer> spatial_parts;
};

struct SceneRecord {
  SceneSpec spec;
  Scene scene;
};

/// Parametric unit-RMS signature: 4-partial harmonic stack on the class
/// fundamental, class-rate amplitude modulation, band-limited noise floor,
/// all jittered within ±3% by the supplied generator.
std::vector<float> class_signature(int class_id, double duration, std::int32_t sample_rate,
                                   tg::Rng& rng);

/// Per-channel integer delay (0-8 samples) and gain (0.6-1.0); channel 0 is
/// the identity reference (delay 0, gain 1).
AudioBuffer spatialize(const std::vector<float>& src, std::int32_t sample_rate, tg::Rng& rng);

Scene synth_scene(const SceneSpec& spec);

/// Draws class count, distinct ids, and per-source SNRs for a seed.
SceneSpec random_spec(std::uint64_t seed);

/// Streams scene records to WAV files plus a JSON-lines manifest so callers
/// never have to hold a whole corpus in memory.
class DatasetWriter {
 public:
  explicit DatasetWriter(const std::string& dir);
  void add(const SceneRecord& record);
  /// Flushes the manifest and checks for write errors.
  void finish();
  std::size_t size() const { return count_; }

 private:
  std::string dir_;
  std::ofstream manifest_;
  std::size_t count_ = 0;
};

/// WAV + JSON-lines persistence; load inverts persist byte-exactly.
void persist_dataset(const std::vector<SceneRecord>& records, const std::string& dir);
std::vector<SceneRecord> load_dataset(const std::string& dir);

}  // namespace scenesep

#endif  // SCENESEP_SYNTH_HPP_
