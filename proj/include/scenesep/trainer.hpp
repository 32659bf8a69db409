// include/scenesep/trainer.hpp

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

#ifndef SCENESEP_TRAINER_HPP_
#define SCENESEP_TRAINER_HPP_

/// \file trainer.hpp
/// Staged training: separator bootstraps (PIT for the clueless model,
/// enrollment-aligned for the extractor), the two classifier instances, and
/// the clue encoder. Frozen prerequisites have requires_grad cleared, which
/// both prunes the backward graph and guarantees their weights cannot move.

#include <cstdint>
#include <string>
#include <vector>

#include "scenesep/dpc.hpp"
#include "scenesep/sce.hpp"
#include "scenesep/separator.hpp"
#include "scenesep/synth.hpp"
#include "scenesep/tensor.hpp"

namespace scenesep {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Adam with decoupled weight decay:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
/// Parameters whose grad buffer is empty (pruned out of the last backward
/// pass) are treated as zero-gradient.
class AdamW {
 public:
  AdamW(std::vector<tg::Tensor> params, AdamWConfig cfg);

  void step();
  void zero_grad();
  std::int64_t steps_taken() const { return t_; }

 private:
  std::vector<tg::Tensor> params_;
  std::vector<std::vector<float>> m_, v_;
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
};

/// Flips requires_grad on every registered tensor; freezing a model this way
/// removes it from all subsequent backward graphs.
void set_trainable(const ParamRegistry& reg, bool trainable);

struct TrainConfig {
  std::int64_t steps = 100;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::string loss_csv;  // when nonempty: header + one row per step
};

struct TrainStats {
  std::vector<double> losses;
  double mean_head(std::size_t n) const;  // mean of the first n losses
  double mean_tail(std::size_t n) const;  // mean of the last n losses
};

/// Injective best-SNR assignment of references to estimate slots;
/// returns per-slot reference index, -1 for slots left without a reference.
std::vector<int> match_slots(const std::vector<std::vector<float>>& estimates,
                             const std::vector<std::vector<float>>& refs);

/// Per-frame activity targets: the reference is cut into `frames` equal
/// chunks and a chunk counts active when its RMS exceeds -40 dBFS.
std::vector<float> frame_activity(const std::vector<float>& ref, std::int64_t frames);

/// Sum over slots of SNR loss (matched) or mixture-relative silence loss
/// (unmatched), divided by the slot count.
tg::Tensor separation_loss(const std::vector<tg::Tensor>& estimates,
                           const std::vector<int>& slot_to_ref,
                           const std::vector<std::vector<float>>& refs,
                           const std::vector<float>& mix_ch0);

/// Permutation-invariant bootstrap of the clueless separator.
TrainStats train_uss(UssModel& uss, const std::vector<SceneRecord>& train,
                     const TrainConfig& cfg);

/// Extractor bootstrap: enrollments come from the frozen clueless model, the
/// target for each slot is the reference its enrollment matches best.
TrainStats train_tse(TseModel& tse, const UssModel& frozen_uss,
                     const std::vector<SceneRecord>& train, const TrainConfig& cfg);

/// Classifier training over separated objects. frozen_tse == nullptr trains
/// the stage-1 instance on clueless outputs; otherwise objects come from the
/// frozen extractor fed with clueless enrollments.
TrainStats train_dpc(DpcModel& dpc, const UssModel& frozen_uss, const TseModel* frozen_tse,
                     const std::vector<SceneRecord>& train, const TrainConfig& cfg);

/// Clue-encoder training with everything else frozen: stage-1 inference
/// derives the clues, FiLM-conditioned extraction is scored by the masked
/// SNR loss against the references.
TrainStats train_sce(SceModel& sce, const UssModel& frozen_uss, const TseModel& frozen_tse,
                     const DpcModel& frozen_dpc_uss, const std::vector<SceneRecord>& train,
                     EmbeddingKind kind, const TrainConfig& cfg);

}  // namespace scenesep

#endif  // SCENESEP_TRAINER_HPP_
