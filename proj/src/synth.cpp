// src/synth.cpp

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

#include "scenesep/synth.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "scenesep/stft.hpp"

namespace scenesep {

namespace {

constexpr double kPi = 3.14159265358979323846;

// One RNG stream per independent random decision, all keyed off the scene
// seed so scenes are fully reproducible.
constexpr std::uint64_t kStreamSpec = 0;
constexpr std::uint64_t kStreamFgSig = 1;    // +i per foreground
constexpr std::uint64_t kStreamFgSpat = 11;  // +i per foreground
constexpr std::uint64_t kStreamIntfSig = 21;
constexpr std::uint64_t kStreamIntfSpat = 22;
constexpr std::uint64_t kStreamNoise = 30;

constexpr double kNoiseDisabledBelowDb = -200.0;
constexpr double kNominalNoiseFloorDb = -30.0;
constexpr double kInterferenceSnrLo = -5.0;
constexpr double kInterferenceSnrHi = 5.0;

double rms_of(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

// White noise brick-wall filtered to [lo_hz, hi_hz] via a padded FFT.
std::vector<double> band_noise(std::int64_t n, std::int32_t sr, double lo_hz, double hi_hz,
                               tg::Rng& rng) {
  std::size_t m = 1;
  while (m < static_cast<std::size_t>(n)) m <<= 1;
  std::vector<std::complex<double>> z(m);
  for (auto& v : z) v = {rng.normal(), 0.0};
  tg::fft_inplace(z, false);
  const double hz_per_bin = static_cast<double>(sr) / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t mirror = k <= m / 2 ? k : m - k;
    const double f = static_cast<double>(mirror) * hz_per_bin;
    if (f < lo_hz || f > hi_hz) z[k] = {0.0, 0.0};
  }
  tg::fft_inplace(z, true);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)].real();
  return out;
}

}  // namespace

std::vector<float> class_signature(int class_id, double duration, std::int32_t sample_rate,
                                   tg::Rng& rng) {
  if (class_id < 0 || class_id > kInterferenceClass)
    throw std::invalid_argument("class_signature: class id " + std::to_string(class_id) +
                                " outside 0.." + std::to_string(kInterferenceClass));
  const std::int64_t n = static_cast<std::int64_t>(duration * sample_rate + 0.5);
  if (n < 1) throw std::invalid_argument("class_signature: empty duration");

  const bool interference = class_id == kInterferenceClass;
  // Interference uses inharmonic partials so it sits outside the class grid.
  const double partials_harm[4] = {1.0, 2.0, 3.0, 4.0};
  const double partials_inharm[4] = {1.0, 2.414, 3.898, 5.318};
  const double* partials = interference ? partials_inharm : partials_harm;

  double f0 = interference ? 660.0 : class_f0(class_id);
  f0 *= 1.0 + 0.03 * rng.uniform(-1.0, 1.0);
  double am_rate = interference ? 9.0 : 1.0 + 0.35 * class_id;
  am_rate *= 1.0 + 0.03 * rng.uniform(-1.0, 1.0);

  double phase[4];
  for (auto& p : phase) p = rng.uniform(0.0, 2.0 * kPi);
  const double phase_am = rng.uniform(0.0, 2.0 * kPi);

  std::vector<double> sig(static_cast<std::size_t>(n), 0.0);
  const double dt = 1.0 / static_cast<double>(sample_rate);
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    double tone = 0.0;
    for (int h = 0; h < 4; ++h)
      tone += std::sin(2.0 * kPi * partials[h] * f0 * t + phase[h]) / static_cast<double>(h + 1);
    const double env = 0.75 + 0.25 * std::cos(2.0 * kPi * am_rate * t + phase_am);
    sig[static_cast<std::size_t>(i)] = tone * env;
  }

  const double lo = interference ? 1.5 * f0 : 2.0 * f0;
  const double hi = interference ? 5.0 * f0 : 4.0 * f0;
  std::vector<double> noise = band_noise(n, sample_rate, lo, hi, rng);
  const double noise_rms = rms_of(noise);
  const double target = 0.1 * rms_of(sig);  // noise floor 20 dB under the tone
  if (noise_rms > 0.0) {
    const double g = target / noise_rms;
    for (std::int64_t i = 0; i < n; ++i) sig[static_cast<std::size_t>(i)] += g * noise[static_cast<std::size_t>(i)];
  }

  const double norm = 1.0 / rms_of(sig);
  std::vector<float> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = static_cast<float>(sig[static_cast<std::size_t>(i)] * norm);
  return out;
}

AudioBuffer spatialize(const std::vector<float>& src, std::int32_t sample_rate, tg::Rng& rng) {
  if (src.empty()) throw std::invalid_argument("spatialize: empty source");
  const std::int64_t n = static_cast<std::int64_t>(src.size());
  AudioBuffer out = AudioBuffer::zeros(kMixChannels, n, sample_rate);
  for (std::int64_t c = 0; c < kMixChannels; ++c) {
    const std::int64_t delay = c == 0 ? 0 : rng.uniform_int(0, 8);
    const float gain = c == 0 ? 1.0f : static_cast<float>(rng.uniform(0.6, 1.0));
    float* dst = out.channel(c);
    for (std::int64_t i = delay; i < n; ++i)
      dst[i] = gain * src[static_cast<std::size_t>(i - delay)];
  }
  return out;
}

Scene synth_scene(const SceneSpec& spec) {
  const std::size_t n_fg = spec.class_ids.size();
  if (n_fg < 1 || n_fg > 3)
    throw std::invalid_argument("synth_scene: need 1..3 foregrounds, got " + std::to_string(n_fg));
  for (std::size_t i = 0; i < n_fg; ++i) {
    if (spec.class_ids[i] < 0 || spec.class_ids[i] >= kNumClasses)
      throw std::invalid_argument("synth_scene: class id out of range");
    for (std::size_t j = i + 1; j < n_fg; ++j)
      if (spec.class_ids[i] == spec.class_ids[j])
        throw std::invalid_argument("synth_scene: duplicate class id " +
                                    std::to_string(spec.class_ids[i]));
  }
  if (spec.fg_snr_db.size() != n_fg)
    throw std::invalid_argument("synth_scene: fg_snr_db length mismatch");
  for (double s : spec.fg_snr_db)
    if (!std::isfinite(s)) throw std::invalid_argument("synth_scene: non-finite SNR");

  const std::int64_t n = spec.samples();
  const bool noise_on = spec.noise_floor_db > kNoiseDisabledBelowDb;
  // Sources are scaled against the noise floor; with noise disabled the
  // nominal floor keeps absolute levels comparable.
  const double floor_db = noise_on ? spec.noise_floor_db : kNominalNoiseFloorDb;
  const double noise_rms = std::pow(10.0, floor_db / 20.0);

  Scene scene;
  scene.mixture = AudioBuffer::zeros(kMixChannels, n, spec.sample_rate);
  scene.noise = AudioBuffer::zeros(kMixChannels, n, spec.sample_rate);

  for (std::size_t i = 0; i < n_fg; ++i) {
    tg::Rng sig_rng(spec.seed, kStreamFgSig + i);
    std::vector<float> sig = class_signature(spec.class_ids[i], spec.duration, spec.sample_rate,
                                             sig_rng);
    const float g = static_cast<float>(noise_rms * std::pow(10.0, spec.fg_snr_db[i] / 20.0));
    for (auto& v : sig) v *= g;
    tg::Rng spat_rng(spec.seed, kStreamFgSpat + i);
    scene.spatial_parts.push_back(spatialize(sig, spec.sample_rate, spat_rng));
    scene.fg_refs.emplace_back(spec.class_ids[i], std::move(sig));
  }

  if (spec.interference_present) {
    tg::Rng sig_rng(spec.seed, kStreamIntfSig);
    const double snr = sig_rng.uniform(kInterferenceSnrLo, kInterferenceSnrHi);
    std::vector<float> sig = class_signature(kInterferenceClass, spec.duration, spec.sample_rate,
                                             sig_rng);
    const float g = static_cast<float>(noise_rms * std::pow(10.0, snr / 20.0));
    for (auto& v : sig) v *= g;
    tg::Rng spat_rng(spec.seed, kStreamIntfSpat);
    scene.spatial_parts.push_back(spatialize(sig, spec.sample_rate, spat_rng));
    scene.interference = std::move(sig);
  }

  if (noise_on) {
    tg::Rng noise_rng(spec.seed, kStreamNoise);
    for (std::int64_t c = 0; c < kMixChannels; ++c) {
      float* dst = scene.noise.channel(c);
      for (std::int64_t i = 0; i < n; ++i)
        dst[i] = static_cast<float>(noise_rng.normal() * noise_rms);
    }
  }

  // Sum order pinned: foregrounds, interference, noise.
  for (const AudioBuffer& part : scene.spatial_parts)
    for (std::size_t i = 0; i < scene.mixture.data.size(); ++i)
      scene.mixture.data[i] += part.data[i];
  for (std::size_t i = 0; i < scene.mixture.data.size(); ++i)
    scene.mixture.data[i] += scene.noise.data[i];
  return scene;
}

SceneSpec random_spec(std::uint64_t seed) {
  tg::Rng rng(seed, kStreamSpec);
  SceneSpec spec;
  spec.seed = seed;
  const std::int64_t n_fg = rng.uniform_int(1, 3);
  int ids[kNumClasses];
  for (int i = 0; i < kNumClasses; ++i) ids[i] = i;
  for (std::int64_t i = 0; i < n_fg; ++i) {
    const std::int64_t j = rng.uniform_int(i, kNumClasses - 1);
    std::swap(ids[i], ids[j]);
    spec.class_ids.push_back(ids[i]);
    spec.fg_snr_db.push_back(rng.uniform(-5.0, 10.0));
  }
  spec.interference_present = rng.uniform() < 0.5;
  return spec;
}

namespace {

nlohmann::json spec_to_json(const SceneSpec& s) {
  nlohmann::json j;
  j["sr"] = s.sample_rate;
  j["duration"] = s.duration;
  j["classes"] = s.class_ids;
  j["fg_snr_db"] = s.fg_snr_db;
  j["interference"] = s.interference_present;
  j["noise_floor_db"] = s.noise_floor_db;
  j["seed"] = s.seed;
  return j;
}

SceneSpec spec_from_json(const nlohmann::json& j) {
  SceneSpec s;
  s.sample_rate = j.at("sr").get<std::int32_t>();
  s.duration = j.at("duration").get<double>();
  s.class_ids = j.at("classes").get<std::vector<int>>();
  s.fg_snr_db = j.at("fg_snr_db").get<std::vector<double>>();
  s.interference_present = j.at("interference").get<bool>();
  s.noise_floor_db = j.at("noise_floor_db").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

std::string scene_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "scene_%05zu", index);
  return buf;
}

}  // namespace

DatasetWriter::DatasetWriter(const std::string& dir) : dir_(dir) {
  std::filesystem::create_directories(dir_);
  manifest_.open(dir_ + "/manifest.jsonl", std::ios::trunc);
  if (!manifest_) throw std::runtime_error("persist_dataset: cannot write manifest in " + dir_);
}

void DatasetWriter::add(const SceneRecord& rec) {
  const std::string id = scene_id(count_);
  nlohmann::json row = spec_to_json(rec.spec);
  row["id"] = id;

  const std::string mix_name = id + "_mix.wav";
  write_wav(dir_ + "/" + mix_name, rec.scene.mixture);
  nlohmann::json paths;
  paths["mixture"] = mix_name;

  nlohmann::json refs = nlohmann::json::array();
  for (std::size_t k = 0; k < rec.scene.fg_refs.size(); ++k) {
    const std::string name = id + "_ref" + std::to_string(k) + ".wav";
    write_wav(dir_ + "/" + name,
              AudioBuffer::mono(rec.scene.fg_refs[k].second, rec.spec.sample_rate));
    refs.push_back(name);
  }
  paths["refs"] = refs;

  if (!rec.scene.interference.empty()) {
    const std::string name = id + "_intf.wav";
    write_wav(dir_ + "/" + name, AudioBuffer::mono(rec.scene.interference, rec.spec.sample_rate));
    paths["interference"] = name;
  } else {
    paths["interference"] = nullptr;
  }

  const std::string noise_name = id + "_noise.wav";
  write_wav(dir_ + "/" + noise_name, rec.scene.noise);
  paths["noise"] = noise_name;

  row["paths"] = paths;
  manifest_ << row.dump() << "\n";
  ++count_;
}

void DatasetWriter::finish() {
  manifest_.flush();
  if (!manifest_) throw std::runtime_error("persist_dataset: manifest write failed in " + dir_);
}

void persist_dataset(const std::vector<SceneRecord>& records, const std::string& dir) {
  DatasetWriter writer(dir);
  for (const SceneRecord& rec : records) writer.add(rec);
  writer.finish();
}

std::vector<SceneRecord> load_dataset(const std::string& dir) {
  std::ifstream manifest(dir + "/manifest.jsonl");
  if (!manifest) throw std::runtime_error("load_dataset: cannot open " + dir + "/manifest.jsonl");
  std::vector<SceneRecord> out;
  std::string line;
  std::size_t row_no = 0;
  while (std::getline(manifest, line)) {
    ++row_no;
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("load_dataset: manifest row " + std::to_string(row_no) + ": " +
                               e.what());
    }
    SceneRecord rec;
    try {
      rec.spec = spec_from_json(row);
      const auto& paths = row.at("paths");
      rec.scene.mixture = read_wav(dir + "/" + paths.at("mixture").get<std::string>());
      const auto refs = paths.at("refs").get<std::vector<std::string>>();
      if (refs.size() != rec.spec.class_ids.size())
        throw std::runtime_error("ref count does not match class list");
      for (std::size_t k = 0; k < refs.size(); ++k) {
        AudioBuffer ref = read_wav(dir + "/" + refs[k]);
        if (ref.channels != 1) throw std::runtime_error(refs[k] + ": expected mono reference");
        rec.scene.fg_refs.emplace_back(rec.spec.class_ids[k], ref.channel_vec(0));
      }
      if (!paths.at("interference").is_null()) {
        AudioBuffer intf = read_wav(dir + "/" + paths.at("interference").get<std::string>());
        rec.scene.interference = intf.channel_vec(0);
      }
      rec.scene.noise = read_wav(dir + "/" + paths.at("noise").get<std::string>());
      if (rec.scene.mixture.channels != kMixChannels)
        throw std::runtime_error("mixture is not 4-channel");
    } catch (const std::exception& e) {
      throw std::runtime_error("load_dataset: manifest row " + std::to_string(row_no) + ": " +
                               e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace scenesep
