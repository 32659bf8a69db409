// src/sce.cpp

// Copyright 2026 The scenesep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scenesep/sce.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace scenesep {

using tg::Index;
using tg::Tensor;

void SceModel::init(std::uint64_t seed) {
  tg::Rng rng(seed, 0);
  const Index labels_in = kSlots * (kNumClasses + 1);
  const Index sems_in = kSlots * EmbedderStubs::kS;
  label_w = Tensor::randn({kCondWidth, labels_in}, rng,
                          1.0f / std::sqrt(static_cast<float>(labels_in)), true);
  label_b = Tensor::zeros({kCondWidth}, true);
  sem_w = Tensor::randn({kCondWidth, sems_in}, rng,
                        1.0f / std::sqrt(static_cast<float>(sems_in)), true);
  sem_b = Tensor::zeros({kCondWidth}, true);
  for (auto& h : heads) {
    // Zero heads make every modulation the identity until training moves them.
    h.w1 = Tensor::zeros({kSepChannels, kCondWidth}, true);
    h.b1 = Tensor::zeros({kSepChannels}, true);
    h.w2 = Tensor::zeros({kSepChannels, kCondWidth}, true);
    h.b2 = Tensor::zeros({kSepChannels}, true);
  }
}

tg::Tensor SceModel::encode_labels(const std::array<int, kSlots>& labels) const {
  const Index width = kNumClasses + 1;
  std::vector<float> onehot(static_cast<std::size_t>(kSlots * width), 0.0f);
  for (Index s = 0; s < kSlots; ++s) {
    const int c = labels[static_cast<std::size_t>(s)];
    if (c < 0 || c > kSilenceLabel)
      tg::fail("sce", "slot label " + std::to_string(c) + " out of range");
    onehot[static_cast<std::size_t>(s * width + c)] = 1.0f;
  }
  return tg::linear(Tensor::from_data({kSlots * width}, onehot), label_w, label_b);
}

tg::Tensor SceModel::encode_semantics(
    const std::array<std::optional<std::vector<float>>, kSlots>& sems) const {
  const Index s_dim = EmbedderStubs::kS;
  std::vector<float> flat(static_cast<std::size_t>(kSlots * s_dim), 0.0f);
  for (Index s = 0; s < kSlots; ++s) {
    const auto& e = sems[static_cast<std::size_t>(s)];
    if (!e) continue;
    if (static_cast<Index>(e->size()) != s_dim)
      tg::fail("sce", "slot " + std::to_string(s) + " semantic width " +
                          std::to_string(e->size()) + ", expected " + std::to_string(s_dim));
    std::copy(e->begin(), e->end(), flat.begin() + s * s_dim);
  }
  return tg::linear(Tensor::from_data({kSlots * s_dim}, flat), sem_w, sem_b);
}

tg::Tensor SceModel::encode(const ClueSet& clues) const {
  Tensor cond = encode_labels(clues.slot_labels);
  if (clues.kind == EmbeddingKind::kNone) return cond;
  return tg::add(cond, encode_semantics(clues.slot_semantics));
}

std::vector<FilmParams> SceModel::film(const tg::Tensor& cond) const {
  if (cond.rank() != 1 || cond.dim(0) != kCondWidth)
    tg::fail("sce", "condition must be [" + std::to_string(kCondWidth) + "]");
  std::vector<FilmParams> out;
  out.reserve(heads.size());
  for (const auto& h : heads)
    out.push_back({tg::linear(cond, h.w1, h.b1), tg::linear(cond, h.w2, h.b2)});
  return out;
}

ParamRegistry SceModel::params() const {
  ParamRegistry r;
  r.add("label.w", label_w);
  r.add("label.b", label_b);
  r.add("sem.w", sem_w);
  r.add("sem.b", sem_b);
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const std::string p = "film" + std::to_string(k);
    r.add(p + ".w1", heads[k].w1);
    r.add(p + ".b1", heads[k].b1);
    r.add(p + ".w2", heads[k].w2);
    r.add(p + ".b2", heads[k].b2);
  }
  return r;
}

std::map<std::string, std::string> SceModel::meta() const {
  return {{"model", "sce"},
          {"cond_width", std::to_string(kCondWidth)},
          {"blocks", std::to_string(kSepBlocks)},
          {"film_width", std::to_string(kSepChannels)}};
}

void SceModel::check_meta(const std::map<std::string, std::string>& m) const {
  check_meta_matches(meta(), m);
}

ClueSet derive_clues(const std::vector<ClassPrediction>& preds,
                     const std::vector<std::vector<float>>& waveforms, EmbeddingKind kind) {
  if (preds.size() != static_cast<std::size_t>(kSlots) || waveforms.size() != preds.size())
    tg::fail("derive_clues", "need exactly " + std::to_string(kSlots) + " predictions/waveforms");
  ClueSet clues;
  clues.kind = kind;
  const EmbedderStubs& stubs = embedder_stubs();
  for (std::size_t s = 0; s < preds.size(); ++s) {
    const ClassPrediction& p = preds[s];
    if (!p.is_on) {
      clues.slot_labels[s] = kSilenceLabel;
      continue;  // silent slots carry no semantics
    }
    clues.slot_labels[s] = p.best_class;
    switch (kind) {
      case EmbeddingKind::kNone:
        break;
      case EmbeddingKind::kM2d:
      case EmbeddingKind::kClapAudio:
        clues.slot_semantics[s] = stubs.semantic_audio(waveforms[s], kind);
        break;
      case EmbeddingKind::kClapText:
        clues.slot_semantics[s] = stubs.semantic_text(p.best_class);
        break;
    }
  }
  return clues;
}

namespace {
std::atomic<int> g_taint_depth{0};
}  // namespace

TaintScope::TaintScope() { ++g_taint_depth; }
TaintScope::~TaintScope() { --g_taint_depth; }

bool ground_truth_blocked() { return g_taint_depth.load() > 0; }

std::vector<int> ground_truth_labels(const Scene& scene) {
  if (ground_truth_blocked())
    throw std::logic_error("ground_truth_labels: called during an inference section");
  std::vector<int> out;
  out.reserve(scene.fg_refs.size());
  for (const auto& [c, wav] : scene.fg_refs) out.push_back(c);
  return out;
}

}  // namespace scenesep
