// src/pipeline.cpp

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

#include "scenesep/pipeline.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "scenesep/trainer.hpp"

namespace scenesep {

std::vector<int> StageTraceRow::active_classes() const {
  std::vector<int> out;
  for (std::size_t s = 0; s < slot_classes.size(); ++s)
    if (slot_on[s]) out.push_back(slot_classes[s]);
  return out;
}

Pipeline::Pipeline(const UssModel& uss, const TseModel& tse, const DpcModel& dpc_uss,
                   const DpcModel& dpc_tse, const SceModel& sce, EmbeddingKind kind)
    : uss_(uss), tse_(tse), dpc_uss_(dpc_uss), dpc_tse_(dpc_tse), sce_(sce), kind_(kind) {}

StageResult Pipeline::run_stage1(const AudioBuffer& mix) const {
  TaintScope guard;
  const EmbedderStubs& stubs = embedder_stubs();
  SeparatorOutput out = uss_.forward(mix);
  StageResult res;
  res.stage = 1;
  for (std::size_t s = 0; s < out.waveforms.size(); ++s) {
    res.waveforms.push_back(out.waveforms[s].impl()->data);
    res.predictions.push_back(
        dpc_uss_.classify(out.objects[s], stubs.audio_features(res.waveforms[s])));
  }
  return res;
}

StageResult Pipeline::refine(const AudioBuffer& mix, const StageResult& prev, int stage) const {
  if (prev.waveforms.size() != static_cast<std::size_t>(kSlots))
    tg::fail("pipeline", "previous stage must carry " + std::to_string(kSlots) + " waveforms");
  TaintScope guard;
  const EmbedderStubs& stubs = embedder_stubs();

  StageResult res;
  res.stage = stage;
  res.clue_set = derive_clues(prev.predictions, prev.waveforms, kind_);
  const std::vector<FilmParams> film = sce_.film(sce_.encode(*res.clue_set));

  std::array<std::vector<float>, kSlots> enroll;
  for (std::size_t s = 0; s < enroll.size(); ++s) enroll[s] = prev.waveforms[s];
  SeparatorOutput out = tse_.forward(mix, enroll, &film);
  for (std::size_t s = 0; s < out.waveforms.size(); ++s) {
    res.waveforms.push_back(out.waveforms[s].impl()->data);
    res.predictions.push_back(
        dpc_tse_.classify(out.objects[s], stubs.audio_features(res.waveforms[s])));
  }
  return res;
}

StageResult Pipeline::run_stage2(const AudioBuffer& mix, const StageResult& prev) const {
  return refine(mix, prev, 2);
}

StageResult Pipeline::run_stage3(const AudioBuffer& mix, const StageResult& prev) const {
  return refine(mix, prev, 3);
}

std::array<StageResult, 3> Pipeline::run_mixture(const AudioBuffer& mix) const {
  std::array<StageResult, 3> stages;
  stages[0] = run_stage1(mix);
  stages[1] = run_stage2(mix, stages[0]);
  stages[2] = run_stage3(mix, stages[1]);
  return stages;
}

namespace {

StageTraceRow score_stage(const StageResult& res, const Scene& scene) {
  StageTraceRow row;
  row.stage = res.stage;
  for (const ClassPrediction& p : res.predictions) {
    row.slot_classes.push_back(p.best_class);
    row.slot_on.push_back(p.is_on);
  }

  const std::vector<float> mix0 = scene.mixture.channel_vec(0);
  LabeledEstimates labeled;
  labeled.mixture = mix0;
  for (std::size_t s = 0; s < res.waveforms.size(); ++s)
    if (res.predictions[s].is_on)
      labeled.predicted.emplace_back(res.predictions[s].best_class, res.waveforms[s]);
  std::vector<std::vector<float>> refs;
  for (const auto& [c, wav] : scene.fg_refs) {
    labeled.reference.emplace_back(c, wav);
    refs.push_back(wav);
  }
  row.ca_sdri = ca_sdri(labeled);

  const std::vector<int> assign = match_slots(res.waveforms, refs);
  double snri_sum = 0.0;
  for (std::size_t s = 0; s < assign.size(); ++s)
    if (assign[s] >= 0)
      snri_sum += sdri(res.waveforms[s], refs[static_cast<std::size_t>(assign[s])], mix0);
  row.mean_snri = snri_sum / static_cast<double>(refs.size());
  return row;
}

void dump_wavs(const std::string& dir, const std::string& id, const StageResult& res,
               std::int32_t sample_rate) {
  for (std::size_t s = 0; s < res.waveforms.size(); ++s) {
    const std::string name = dir + "/" + id + "_s" + std::to_string(res.stage) + "_slot" +
                             std::to_string(s) + ".wav";
    write_wav(name, AudioBuffer::mono(res.waveforms[s], sample_rate));
  }
}

}  // namespace

EvalResult evaluate(const Pipeline& pipe, const std::vector<SceneRecord>& scenes,
                    const std::string& wav_dir) {
  if (scenes.empty()) throw std::invalid_argument("evaluate: no scenes");
  EvalResult result;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const SceneRecord& rec = scenes[i];
    const std::string id = "scene_" + std::to_string(rec.spec.seed);
    try {
      TraceRow row;
      row.id = id;
      const std::array<StageResult, 3> stages = pipe.run_mixture(rec.scene.mixture);
      row.ref_classes = ground_truth_labels(rec.scene);
      for (std::size_t k = 0; k < stages.size(); ++k) {
        row.stages[k] = score_stage(stages[k], rec.scene);
        if (!wav_dir.empty()) dump_wavs(wav_dir, id, stages[k], rec.spec.sample_rate);
      }
      result.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      result.failures.push_back(id + ": " + e.what());
    }
  }
  if (result.rows.empty()) throw std::runtime_error("evaluate: every mixture failed");

  for (std::size_t k = 0; k < 3; ++k) {
    StageSummary& sum = result.stages[k];
    std::vector<std::pair<std::vector<int>, std::vector<int>>> acc_rows;
    for (const TraceRow& row : result.rows) {
      sum.ca_sdri += row.stages[k].ca_sdri;
      sum.mean_snri += row.stages[k].mean_snri;
      acc_rows.emplace_back(row.stages[k].active_classes(), row.ref_classes);
    }
    const auto n = static_cast<double>(result.rows.size());
    sum.ca_sdri /= n;
    sum.mean_snri /= n;
    sum.acc_mix = acc_mix(acc_rows);
  }
  result.transitions[0] =
      transition_report(stage_slice(result.rows, 1), stage_slice(result.rows, 2));
  result.transitions[1] =
      transition_report(stage_slice(result.rows, 2), stage_slice(result.rows, 3));
  return result;
}

namespace {

nlohmann::json stage_to_json(const StageTraceRow& s) {
  nlohmann::json j;
  j["stage"] = s.stage;
  j["slot_classes"] = s.slot_classes;
  j["slot_on"] = s.slot_on;
  j["ca_sdri"] = s.ca_sdri;
  j["mean_snri"] = s.mean_snri;
  return j;
}

StageTraceRow stage_from_json(const nlohmann::json& j) {
  StageTraceRow s;
  s.stage = j.at("stage").get<int>();
  s.slot_classes = j.at("slot_classes").get<std::vector<int>>();
  s.slot_on = j.at("slot_on").get<std::vector<bool>>();
  s.ca_sdri = j.at("ca_sdri").get<double>();
  s.mean_snri = j.at("mean_snri").get<double>();
  if (s.slot_on.size() != s.slot_classes.size())
    throw std::runtime_error("slot_on/slot_classes length mismatch");
  return s;
}

}  // namespace

void save_traces(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_traces: cannot write " + path);
  for (const TraceRow& row : rows) {
    nlohmann::json j;
    j["id"] = row.id;
    j["refs"] = row.ref_classes;
    nlohmann::json stages = nlohmann::json::array();
    for (const StageTraceRow& s : row.stages) stages.push_back(stage_to_json(s));
    j["stages"] = stages;
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("save_traces: write failed for " + path);
}

std::vector<TraceRow> load_traces(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_traces: cannot open " + path);
  std::vector<TraceRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      TraceRow row;
      row.id = j.at("id").get<std::string>();
      row.ref_classes = j.at("refs").get<std::vector<int>>();
      const auto& stages = j.at("stages");
      if (stages.size() != 3) throw std::runtime_error("expected 3 stages");
      for (std::size_t k = 0; k < 3; ++k) row.stages[k] = stage_from_json(stages[k]);
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      throw std::runtime_error("load_traces: " + path + " line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return rows;
}

std::vector<MixtureStage> stage_slice(const std::vector<TraceRow>& rows, int stage) {
  if (stage < 1 || stage > 3) throw std::invalid_argument("stage_slice: stage must be 1..3");
  std::vector<MixtureStage> out;
  out.reserve(rows.size());
  for (const TraceRow& row : rows) {
    MixtureStage m;
    m.id = row.id;
    m.ref_classes = row.ref_classes;
    const StageTraceRow& s = row.stages[static_cast<std::size_t>(stage - 1)];
    m.pred_classes = s.active_classes();
    m.ca_sdri = s.ca_sdri;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace scenesep
