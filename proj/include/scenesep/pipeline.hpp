// include/scenesep/pipeline.hpp

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

#ifndef SCENESEP_PIPELINE_HPP_
#define SCENESEP_PIPELINE_HPP_

/// \file pipeline.hpp
/// Three-stage orchestration: clueless separation + classification (stage 1),
/// clue-conditioned extraction + re-classification (stage 2), and one more
/// refinement pass over the stage-2 outputs (stage 3, same weights).  All
/// inference sections run under a TaintScope so any ground-truth access
/// inside them throws.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scenesep/dpc.hpp"
#include "scenesep/metrics.hpp"
#include "scenesep/sce.hpp"
#include "scenesep/separator.hpp"
#include "scenesep/synth.hpp"

namespace scenesep {

struct StageResult {
  int stage = 1;
  std::vector<std::vector<float>> waveforms;  // kSlots entries
  std::vector<ClassPrediction> predictions;   // kSlots entries
  std::optional<ClueSet> clue_set;            // absent for stage 1
};

/// Persisted per-stage numbers for one mixture.
struct StageTraceRow {
  int stage = 1;
  std::vector<int> slot_classes;  // best class per slot, on or off
  std::vector<bool> slot_on;
  double ca_sdri = 0.0;
  double mean_snri = 0.0;  // over best-permutation-matched references
  std::vector<int> active_classes() const;
};

struct TraceRow {
  std::string id;
  std::vector<int> ref_classes;
  std::array<StageTraceRow, 3> stages;
};

class Pipeline {
 public:
  Pipeline(const UssModel& uss, const TseModel& tse, const DpcModel& dpc_uss,
           const DpcModel& dpc_tse, const SceModel& sce, EmbeddingKind kind);

  StageResult run_stage1(const AudioBuffer& mix) const;
  StageResult run_stage2(const AudioBuffer& mix, const StageResult& prev) const;
  StageResult run_stage3(const AudioBuffer& mix, const StageResult& prev) const;
  std::array<StageResult, 3> run_mixture(const AudioBuffer& mix) const;

  EmbeddingKind kind() const { return kind_; }

 private:
  StageResult refine(const AudioBuffer& mix, const StageResult& prev, int stage) const;

  const UssModel& uss_;
  const TseModel& tse_;  // one instance serves stages 2 and 3
  const DpcModel& dpc_uss_;
  const DpcModel& dpc_tse_;
  const SceModel& sce_;
  EmbeddingKind kind_;
};

struct StageSummary {
  double ca_sdri = 0.0;    // mean per-mixture CA-SDRi, dB
  double acc_mix = 0.0;    // %
  double mean_snri = 0.0;  // mean per-mixture matched SNRi, dB
};

struct EvalResult {
  std::vector<TraceRow> rows;
  std::array<StageSummary, 3> stages;
  std::array<TransitionReport, 2> transitions;  // stage 1->2 and 2->3
  std::vector<std::string> failures;            // "<id>: <error>" per bad mixture
};

/// Runs the pipeline over every scene in order, scores each stage, and keeps
/// going past per-mixture failures. When wav_dir is nonempty the per-stage
/// slot estimates are written there as <id>_s<stage>_slot<k>.wav.
EvalResult evaluate(const Pipeline& pipe, const std::vector<SceneRecord>& scenes,
                    const std::string& wav_dir = "");

void save_traces(const std::string& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> load_traces(const std::string& path);

/// Metric-ready slice of one stage across mixtures.
std::vector<MixtureStage> stage_slice(const std::vector<TraceRow>& rows, int stage);

}  // namespace scenesep

#endif  // SCENESEP_PIPELINE_HPP_
