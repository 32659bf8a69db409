// include/scenesep/sce.hpp

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

#ifndef SCENESEP_SCE_HPP_
#define SCENESEP_SCE_HPP_

/// \file sce.hpp
/// Semantic clue encoder: turns per-slot class labels and optional semantic
/// embeddings into one condition vector, and maps that vector through
/// per-block zero-initialized FiLM heads into the extractor's modulation
/// parameters.  With freshly initialized heads every modulation is exactly
/// the identity, so an unconditioned and a conditioned extractor agree
/// bit-for-bit until training moves the heads.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scenesep/checkpoint.hpp"
#include "scenesep/dpc.hpp"
#include "scenesep/embedders.hpp"
#include "scenesep/separator.hpp"
#include "scenesep/synth.hpp"
#include "scenesep/tensor.hpp"

namespace scenesep {

inline constexpr tg::Index kCondWidth = 32;          // E
inline constexpr int kSilenceLabel = kNumClasses;    // 18

/// Per-slot clues for one extraction pass. Silent slots carry the silence
/// label and no semantic embedding.
struct ClueSet {
  std::array<int, kSlots> slot_labels{};  // 0..17, or kSilenceLabel
  std::array<std::optional<std::vector<float>>, kSlots> slot_semantics;
  EmbeddingKind kind = EmbeddingKind::kNone;
};

class SceModel {
 public:
  void init(std::uint64_t seed);

  /// Concatenated per-slot one-hots (3 x 19) through the label encoder.
  tg::Tensor encode_labels(const std::array<int, kSlots>& labels) const;
  /// Concatenated per-slot semantic embeddings (absent -> zeros) through the
  /// semantic encoder.
  tg::Tensor encode_semantics(
      const std::array<std::optional<std::vector<float>>, kSlots>& sems) const;
  /// Label + semantic condition embeddings, summed. kind == kNone skips the
  /// semantic encoder entirely, which equals feeding all-absent slots.
  tg::Tensor encode(const ClueSet& clues) const;

  /// One (beta1, beta2) pair per extractor block from the condition vector.
  std::vector<FilmParams> film(const tg::Tensor& cond) const;

  ParamRegistry params() const;
  std::map<std::string, std::string> meta() const;
  void check_meta(const std::map<std::string, std::string>& m) const;

  tg::Tensor label_w, label_b;  // [E, 3*19]
  tg::Tensor sem_w, sem_b;      // [E, 3*S]
  struct FilmHead {
    tg::Tensor w1, b1;  // [D, E], [D]  -> beta1
    tg::Tensor w2, b2;  // [D, E], [D]  -> beta2
  };
  std::array<FilmHead, kSepBlocks> heads;
};

/// Builds the next stage's clues from the previous stage's outputs only:
/// labels from the classifier argmax (silence when off), semantics from the
/// estimated waveform (audio kinds) or the predicted class id (text kind).
ClueSet derive_clues(const std::vector<ClassPrediction>& preds,
                     const std::vector<std::vector<float>>& waveforms, EmbeddingKind kind);

/// While any TaintScope is alive, ground_truth_labels() throws. The pipeline
/// wraps its inference sections in a scope so that any future code path
/// consulting scene ground truth during inference fails loudly.
class TaintScope {
 public:
  TaintScope();
  ~TaintScope();
  TaintScope(const TaintScope&) = delete;
  TaintScope& operator=(const TaintScope&) = delete;
};

bool ground_truth_blocked();
/// Foreground class ids of a scene; the only sanctioned label accessor for
/// trainer and metrics code. Throws inside a TaintScope.
std::vector<int> ground_truth_labels(const Scene& scene);

}  // namespace scenesep

#endif  // SCENESEP_SCE_HPP_
