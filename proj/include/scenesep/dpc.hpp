// include/scenesep/dpc.hpp

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

#ifndef SCENESEP_DPC_HPP_
#define SCENESEP_DPC_HPP_

/// \file dpc.hpp
/// Dual-path classifier over separated-object features.
///
/// The classifier runs two symmetric CNN paths over an object feature
/// [D, F, T]: a temporal path that compresses frequency hard and keeps a
/// time sequence, and a frequency path that averages out time and keeps a
/// frequency sequence.  Each path is fused with an aligned slice of the
/// frozen audio-embedder feature, run through a BiGRU and attentive
/// statistics pooling, and the two pooled embeddings feed one linear head
/// with 19 logits (18 classes plus an auxiliary silence logit).  A second
/// per-frame head on the temporal GRU output predicts on/off activity;
/// a source counts as "on" only when the maximum frame probability is
/// strictly above 0.5.

#include <vector>

#include "scenesep/checkpoint.hpp"
#include "scenesep/embedders.hpp"
#include "scenesep/nn_ops.hpp"
#include "scenesep/rng.hpp"
#include "scenesep/separator.hpp"
#include "scenesep/synth.hpp"
#include "scenesep/tensor.hpp"

namespace scenesep {

inline constexpr tg::Index kDpcHidden = 64;      // fused per-step width h
inline constexpr tg::Index kDpcGruHidden = 32;   // per direction
inline constexpr tg::Index kDpcLogits = kNumClasses + 1;  // + silence slot

/// Plain-value classification result for one separated object.
struct ClassPrediction {
  std::vector<float> logits;       // [19]
  std::vector<float> frame_probs;  // temporal-path frame activity, in [0,1]
  bool is_on = false;              // max frame prob strictly above 0.5
  int best_class = 0;              // argmax over the 18 class logits only
};

/// Graph-valued forward pass, used by the trainer.
struct DpcForward {
  tg::Tensor logits;       // [19]
  tg::Tensor frame_probs;  // [T_t]
};

/// Aligned embedder features: mean-pool one axis of [G, F, T], then
/// bilinearly resample the other to the requested length. Exposed for tests.
tg::Tensor align_m2d_temporal(const tg::Tensor& m2d, tg::Index t_len);
tg::Tensor align_m2d_frequency(const tg::Tensor& m2d, tg::Index f_len);

class DpcModel {
 public:
  /// Both CNN paths use 3x3 convolutions (padding 1) and average pooling.
  /// Temporal path: pool (2,2) then (8,1)  -> [D, F/16, T/2], flattened per
  /// frame to a T/2-step sequence of width D*F/16.
  /// Frequency path: pool (2,2) then (2,1), pointwise doubling D -> 2D,
  /// then a time average -> an F/4-step sequence of width 2D.
  void init(std::uint64_t seed);

  /// Runs the full classifier graph on one object feature [D, F, T] and the
  /// matching frozen audio-embedder feature [G, F_m2d, T_m2d].
  DpcForward forward(const tg::Tensor& object, const tg::Tensor& m2d) const;

  /// forward() + value extraction, no gradient bookkeeping by the caller.
  ClassPrediction classify(const tg::Tensor& object, const tg::Tensor& m2d) const;

  ParamRegistry params() const;
  std::map<std::string, std::string> meta() const;
  void check_meta(const std::map<std::string, std::string>& m) const;

  // temporal path
  tg::Tensor t_conv1_w, t_conv1_b;
  tg::Tensor t_conv2_w, t_conv2_b;
  // frequency path
  tg::Tensor f_conv1_w, f_conv1_b;
  tg::Tensor f_conv2_w, f_conv2_b;
  tg::Tensor f_pw_w, f_pw_b;  // pointwise channel doubling
  // fusion with embedder features
  tg::Tensor fuse_t_w, fuse_t_b;  // [h, D*F_t + G]
  tg::Tensor fuse_f_w, fuse_f_b;  // [h, 2D + G]
  // recurrent + pooling stages
  tg::GruWeights t_gru_fwd, t_gru_bwd;
  tg::GruWeights f_gru_fwd, f_gru_bwd;
  tg::AspParams t_asp, f_asp;
  // heads
  tg::Tensor head_w, head_b;    // [19, 4h]
  tg::Tensor onoff_w, onoff_b;  // [1, h]
};

}  // namespace scenesep

#endif  // SCENESEP_DPC_HPP_
