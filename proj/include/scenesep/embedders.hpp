// scenesep/embedders.hpp

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

#ifndef SCENESEP_EMBEDDERS_HPP_
#define SCENESEP_EMBEDDERS_HPP_

#include <string>
#include <vector>

#include "scenesep/tensor.hpp"

namespace scenesep {

enum class EmbeddingKind { kNone, kM2d, kClapText, kClapAudio };

std::string kind_name(EmbeddingKind kind);
EmbeddingKind kind_from_name(const std::string& name);

/// Frozen, seed-pinned stand-ins for the pretrained embedders. All weights
/// are fixed at construction, never registered with any optimizer, and
/// identical across processes.
class EmbedderStubs {
 public:
  static constexpr tg::Index kG = 32;      // audio feature channels
  static constexpr tg::Index kFM2d = 8;    // audio feature frequency extent
  static constexpr tg::Index kS = 64;      // semantic embedding width
  static constexpr int kTextClasses = 18;

  EmbedderStubs();

  /// Two frozen convolutions over a log-magnitude STFT -> [G, F_M2D, T_M2D].
  /// T_M2D depends on the input length; constant tensor (no gradient).
  tg::Tensor audio_features(const std::vector<float>& wave) const;

  /// Global average of audio_features projected to S dims by a per-kind
  /// frozen matrix, L2-normalized. kind must be an audio kind.
  std::vector<float> semantic_audio(const std::vector<float>& wave, EmbeddingKind kind) const;

  /// Row class_id of the frozen orthonormalized text matrix.
  std::vector<float> semantic_text(int class_id) const;

 private:
  tg::Tensor conv1_w_, conv1_b_, conv2_w_, conv2_b_;
  tg::Tensor proj_m2d_, proj_clap_;  // [S, G]
  tg::Tensor text_rows_;             // [18, S], orthonormal rows
};

/// Process-wide stub instance (weights are immutable, so sharing is safe).
const EmbedderStubs& embedder_stubs();

}  // namespace scenesep

#endif  // SCENESEP_EMBEDDERS_HPP_
