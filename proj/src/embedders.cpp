// src/embedders.cpp

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

#include "scenesep/embedders.hpp"

#include <stdexcept>

#include "scenesep/nn_ops.hpp"
#include "scenesep/rng.hpp"
#include "scenesep/stft.hpp"

namespace scenesep {

namespace {

// Stub weights are pinned to this seed forever; changing it invalidates
// every trained checkpoint.
constexpr std::uint64_t kStubSeed = 77;

tg::Tensor orthonormal_rows(tg::Index rows, tg::Index cols, tg::Rng& rng) {
  // Gram-Schmidt in double, stored as float.
  std::vector<std::vector<double>> basis;
  for (tg::Index r = 0; r < rows; ++r) {
    std::vector<double> v(static_cast<std::size_t>(cols));
    for (auto& x : v) x = rng.normal();
    for (const auto& e : basis) {
      double dot = 0.0;
      for (tg::Index c = 0; c < cols; ++c) dot += v[static_cast<std::size_t>(c)] * e[static_cast<std::size_t>(c)];
      for (tg::Index c = 0; c < cols; ++c) v[static_cast<std::size_t>(c)] -= dot * e[static_cast<std::size_t>(c)];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-9) throw std::runtime_error("orthonormal_rows: degenerate draw");
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(rows * cols));
  for (const auto& e : basis)
    for (double x : e) data.push_back(static_cast<float>(x));
  return tg::Tensor::from_data({rows, cols}, std::move(data));
}

}  // namespace

std::string kind_name(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::kNone: return "none";
    case EmbeddingKind::kM2d: return "m2d";
    case EmbeddingKind::kClapText: return "clap-text";
    case EmbeddingKind::kClapAudio: return "clap-audio";
  }
  throw std::invalid_argument("kind_name: bad enum value");
}

EmbeddingKind kind_from_name(const std::string& name) {
  if (name == "none") return EmbeddingKind::kNone;
  if (name == "m2d") return EmbeddingKind::kM2d;
  if (name == "clap-text") return EmbeddingKind::kClapText;
  if (name == "clap-audio") return EmbeddingKind::kClapAudio;
  throw std::invalid_argument("embedding kind '" + name +
                              "' not one of none|m2d|clap-text|clap-audio");
}

EmbedderStubs::EmbedderStubs() {
  tg::Rng r1(kStubSeed, 0), r2(kStubSeed, 1), r3(kStubSeed, 2), r4(kStubSeed, 3);
  conv1_w_ = tg::Tensor::randn({16, 1, 16, 7}, r1, 0.1f);
  conv1_b_ = tg::Tensor::randn({16}, r2, 0.1f);
  conv2_w_ = tg::Tensor::randn({kG, 16, 9, 5}, r3, 0.05f);
  conv2_b_ = tg::Tensor::randn({kG}, r4, 0.1f);
  tg::Rng r5(kStubSeed, 4), r6(kStubSeed, 5), r7(kStubSeed, 6);
  proj_m2d_ = tg::Tensor::randn({kS, kG}, r5, 1.0f);
  proj_clap_ = tg::Tensor::randn({kS, kG}, r6, 1.0f);
  text_rows_ = orthonormal_rows(kTextClasses, kS, r7);
}

tg::Tensor EmbedderStubs::audio_features(const std::vector<float>& wave) const {
  if (wave.empty()) throw std::invalid_argument("audio_features: empty waveform");
  tg::Spectrogram spec = tg::stft(wave);
  std::vector<float> logmag(static_cast<std::size_t>(spec.bins * spec.frames));
  for (std::size_t i = 0; i < logmag.size(); ++i)
    logmag[i] = static_cast<float>(std::log10(std::abs(spec.values[i]) + 1e-6));
  tg::Tensor x = tg::Tensor::from_data({1, spec.bins, spec.frames}, std::move(logmag));
  tg::Tensor h = tg::relu(tg::conv2d(x, conv1_w_, conv1_b_, {8, 2}, {0, 0}));
  return tg::conv2d(h, conv2_w_, conv2_b_, {3, 2}, {0, 0});
}

std::vector<float> EmbedderStubs::semantic_audio(const std::vector<float>& wave,
                                                 EmbeddingKind kind) const {
  const tg::Tensor* proj = nullptr;
  if (kind == EmbeddingKind::kM2d)
    proj = &proj_m2d_;
  else if (kind == EmbeddingKind::kClapAudio)
    proj = &proj_clap_;
  else
    throw std::invalid_argument("semantic_audio: kind " + kind_name(kind) + " is not audio-based");

  tg::Tensor feat = audio_features(wave);
  const tg::Index g = feat.dim(0), inner = feat.numel() / g;
  std::vector<double> gap(static_cast<std::size_t>(g), 0.0);
  for (tg::Index c = 0; c < g; ++c) {
    const float* p = feat.data().data() + c * inner;
    double acc = 0.0;
    for (tg::Index i = 0; i < inner; ++i) acc += p[i];
    gap[static_cast<std::size_t>(c)] = acc / static_cast<double>(inner);
  }
  std::vector<double> emb(static_cast<std::size_t>(kS), 0.0);
  for (tg::Index s = 0; s < kS; ++s) {
    const float* row = proj->data().data() + s * kG;
    double acc = 0.0;
    for (tg::Index c = 0; c < kG; ++c) acc += static_cast<double>(row[c]) * gap[static_cast<std::size_t>(c)];
    emb[static_cast<std::size_t>(s)] = acc;
  }
  double norm = 0.0;
  for (double v : emb) norm += v * v;
  norm = std::sqrt(norm);
  std::vector<float> out(static_cast<std::size_t>(kS), 0.0f);
  if (norm < 1e-12) {
    out[0] = 1.0f;  // degenerate input: fixed unit fallback
  } else {
    for (tg::Index s = 0; s < kS; ++s)
      out[static_cast<std::size_t>(s)] = static_cast<float>(emb[static_cast<std::size_t>(s)] / norm);
  }
  return out;
}

std::vector<float> EmbedderStubs::semantic_text(int class_id) const {
  if (class_id < 0 || class_id >= kTextClasses)
    throw std::invalid_argument("semantic_text: class id " + std::to_string(class_id) +
                                " outside 0..17");
  const float* row = text_rows_.data().data() + static_cast<tg::Index>(class_id) * kS;
  return std::vector<float>(row, row + kS);
}

const EmbedderStubs& embedder_stubs() {
  static const EmbedderStubs instance;
  return instance;
}

}  // namespace scenesep
