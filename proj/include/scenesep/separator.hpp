// scenesep/separator.hpp

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

#ifndef SCENESEP_SEPARATOR_HPP_
#define SCENESEP_SEPARATOR_HPP_

#include <array>
#include <optional>

#include "scenesep/audio.hpp"
#include "scenesep/checkpoint.hpp"
#include "scenesep/nn_ops.hpp"
#include "scenesep/stft.hpp"

namespace scenesep {

inline constexpr tg::Index kSlots = 3;
inline constexpr tg::Index kSepChannels = 16;  // D: object feature embedding width
inline constexpr tg::Index kSepFreq = 65;      // F: backbone frequency bins
inline constexpr tg::Index kSepBlocks = 4;

/// Per-injection-site modulation parameters, one vector per channel.
struct FilmParams {
  tg::Tensor beta1;  // [d]
  tg::Tensor beta2;  // [d]
};

/// out = x + (beta1 (*) x + beta2), broadcast over all trailing axes.
/// Exact identity at beta1 = beta2 = 0.
tg::Tensor residual_film(const tg::Tensor& x, const FilmParams& p);

/// STFT of every channel as real/imag row pairs: [2C, 257, T] constants.
tg::Tensor stft_frontend(const std::vector<std::vector<float>>& channels,
                         const tg::StftConfig& cfg = {});

struct SeparatorOutput {
  std::vector<tg::Tensor> objects;    // kSlots x [D, F, T]
  std::vector<tg::Tensor> waveforms;  // kSlots x [N]
};

namespace detail {

struct SepBlock {
  tg::Tensor conv_w, conv_b;  // 3x3, D->D
  tg::GruWeights gru;         // over time, per frequency bin
  tg::Tensor pw_w, pw_b;      // pointwise, D->D
};

/// Weights shared by both separator roles: spectral projection, input
/// pointwise conv, four conv-recurrent blocks, and the shared audio decoder.
struct SepCore {
  tg::Index channels_in = 0;  // 2C spectrogram rows
  tg::Tensor proj_w, proj_b;  // [65, 257] learned frequency reduction
  tg::Tensor in_w, in_b;      // pointwise, 2C -> D
  std::vector<SepBlock> blocks;
  tg::Tensor dec1_w, dec1_b;  // pointwise, D -> 8
  tg::Tensor dec2_w, dec2_b;  // pointwise, 8 -> 1
  tg::Tensor mask_w, mask_b;  // [257, 65] mask unprojection

  void init(tg::Index channels_in, tg::Rng& rng);
  void collect(ParamRegistry& reg) const;

  /// Projection + input conv + all blocks; film may be null (identity).
  tg::Tensor trunk(const tg::Tensor& spec_in, const std::vector<FilmParams>* film) const;
  /// Object feature -> sigmoid mask [257, T] -> masked inverse STFT of the
  /// reference channel.
  tg::Tensor decode(const tg::Tensor& object, const tg::Tensor& mix_re, const tg::Tensor& mix_im,
                    const tg::StftConfig& cfg) const;
};

}  // namespace detail

/// Clueless universal separator: one trunk over the 4-channel mixture,
/// three slot heads, shared decoder.
class UssModel {
 public:
  explicit UssModel(std::uint64_t seed);

  SeparatorOutput forward(const AudioBuffer& mix) const;

  ParamRegistry params() const;
  std::map<std::string, std::string> meta() const;
  void check_meta(const std::map<std::string, std::string>& meta) const;

  tg::StftConfig stft_cfg;

 private:
  detail::SepCore core_;
  std::array<tg::Tensor, kSlots> slot_w_;
  std::array<tg::Tensor, kSlots> slot_b_;
};

/// Clue-conditioned extractor: three weight-shared streams, stream i seeing
/// the mixture, its own enrollment, and the mean of the other enrollments,
/// which makes slot equivariance under enrollment permutation exact.
/// FiLM parameters (one pair per block) are injected when given.
class TseModel {
 public:
  explicit TseModel(std::uint64_t seed);

  SeparatorOutput forward(const AudioBuffer& mix,
                          const std::array<std::vector<float>, kSlots>& enrollments,
                          const std::vector<FilmParams>* film = nullptr) const;

  ParamRegistry params() const;
  std::map<std::string, std::string> meta() const;
  void check_meta(const std::map<std::string, std::string>& meta) const;

  tg::StftConfig stft_cfg;

 private:
  detail::SepCore core_;
  tg::Tensor feat_w_, feat_b_;  // slot feature head (shared across streams)
};

}  // namespace scenesep

#endif  // SCENESEP_SEPARATOR_HPP_
