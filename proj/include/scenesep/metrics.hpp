// include/scenesep/metrics.hpp

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

#ifndef SCENESEP_METRICS_HPP_
#define SCENESEP_METRICS_HPP_

/// \file metrics.hpp
/// Class-aware evaluation: SDR/SDRi, class-aware SDRi over the union of
/// predicted and reference classes, mixture-level accuracy, and the
/// stage-to-stage transition analysis (W2C/C2C/C2W/W2W).

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace scenesep {

/// sdr = 10*log10(|ref|^2 / (|ref-est|^2 + eps*|ref|^2)), eps = 1e-8, which
/// caps a perfect estimate at 80 dB. Zero-energy references are rejected.
double sdr(const std::vector<float>& est, const std::vector<float>& ref);
double sdri(const std::vector<float>& est, const std::vector<float>& ref,
            const std::vector<float>& mix_ch0);

/// One mixture's class-labeled estimates and references. References carry
/// distinct classes; duplicate predicted classes are merged inside ca_sdri
/// by keeping the highest-energy estimate.
struct LabeledEstimates {
  std::vector<std::pair<int, std::vector<float>>> predicted;
  std::vector<std::pair<int, std::vector<float>>> reference;
  std::vector<float> mixture;  // channel-0 mixture
};

/// CA-SDRi = (1/|P u R|) * sum over the union, where a class contributes its
/// SDRi when predicted and referenced, and 0 when missed or falsely alarmed.
double ca_sdri(const LabeledEstimates& labeled);

/// Percentage of mixtures whose predicted class multiset equals the
/// reference multiset exactly.
double acc_mix(const std::vector<std::pair<std::vector<int>, std::vector<int>>>& mixtures);

/// Per-mixture, per-stage summary consumed by the transition analysis.
struct MixtureStage {
  std::string id;
  std::vector<int> ref_classes;
  std::vector<int> pred_classes;  // active slots only
  double ca_sdri = 0.0;
};

enum Transition { kW2C = 0, kC2C = 1, kC2W = 2, kW2W = 3 };

/// Per-source correctness transitions between two stages. Ratios are over
/// all reference sources and sum to 100. delta_ca_sdri[k] is the mean
/// CA-SDRi change over mixtures containing at least one category-k source
/// (meaningful only where count[k] > 0).
struct TransitionReport {
  std::array<std::int64_t, 4> count{};
  std::array<double, 4> ratio_pct{};
  std::array<double, 4> delta_ca_sdri{};
};

const char* transition_name(Transition t);

TransitionReport transition_report(const std::vector<MixtureStage>& stage_a,
                                   const std::vector<MixtureStage>& stage_b);

/// Aligned-column text grid (first row = header), used for the stage-by-kind
/// result tables.
std::string render_table(const std::vector<std::vector<std::string>>& rows);

}  // namespace scenesep

#endif  // SCENESEP_METRICS_HPP_
