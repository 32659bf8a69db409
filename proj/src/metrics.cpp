// src/metrics.cpp

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

#include "scenesep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace scenesep {

namespace {

constexpr double kSdrEps = 1e-8;

double energy(const std::vector<float>& x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

[[noreturn]] void metric_fail(const std::string& what) {
  throw std::invalid_argument("metrics: " + what);
}

}  // namespace

double sdr(const std::vector<float>& est, const std::vector<float>& ref) {
  if (est.size() != ref.size()) metric_fail("estimate/reference length mismatch");
  const double ref_e = energy(ref);
  if (ref_e <= 0.0) metric_fail("zero-energy reference");
  double err_e = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = static_cast<double>(ref[i]) - est[i];
    err_e += d * d;
  }
  return 10.0 * std::log10(ref_e / (err_e + kSdrEps * ref_e));
}

double sdri(const std::vector<float>& est, const std::vector<float>& ref,
            const std::vector<float>& mix_ch0) {
  return sdr(est, ref) - sdr(mix_ch0, ref);
}

double ca_sdri(const LabeledEstimates& labeled) {
  // Duplicate predicted classes collapse to the highest-energy estimate.
  std::map<int, const std::vector<float>*> pred;
  for (const auto& [c, wav] : labeled.predicted) {
    auto it = pred.find(c);
    if (it == pred.end() || energy(wav) > energy(*it->second)) pred[c] = &wav;
  }
  std::map<int, const std::vector<float>*> ref;
  for (const auto& [c, wav] : labeled.reference) {
    if (!ref.emplace(c, &wav).second) metric_fail("duplicate reference class");
  }
  std::set<int> all;
  for (const auto& [c, wav] : pred) all.insert(c);
  for (const auto& [c, wav] : ref) all.insert(c);
  if (all.empty()) metric_fail("empty class union");

  double total = 0.0;
  for (int c : all) {
    auto pi = pred.find(c);
    auto ri = ref.find(c);
    if (pi == pred.end() || ri == ref.end()) continue;  // contributes 0
    total += sdri(*pi->second, *ri->second, labeled.mixture);
  }
  return total / static_cast<double>(all.size());
}

double acc_mix(const std::vector<std::pair<std::vector<int>, std::vector<int>>>& mixtures) {
  if (mixtures.empty()) metric_fail("acc_mix over no mixtures");
  std::int64_t correct = 0;
  for (const auto& [pred, ref] : mixtures) {
    std::vector<int> p = pred, r = ref;
    std::sort(p.begin(), p.end());
    std::sort(r.begin(), r.end());
    if (p == r) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(mixtures.size());
}

const char* transition_name(Transition t) {
  switch (t) {
    case kW2C: return "W2C";
    case kC2C: return "C2C";
    case kC2W: return "C2W";
    case kW2W: return "W2W";
  }
  return "?";
}

TransitionReport transition_report(const std::vector<MixtureStage>& stage_a,
                                   const std::vector<MixtureStage>& stage_b) {
  if (stage_a.size() != stage_b.size()) metric_fail("transition: trace count mismatch");
  TransitionReport rep;
  std::array<double, 4> delta_sum{};
  std::array<std::int64_t, 4> delta_n{};
  std::int64_t sources = 0;

  for (std::size_t i = 0; i < stage_a.size(); ++i) {
    const MixtureStage& a = stage_a[i];
    const MixtureStage& b = stage_b[i];
    if (a.id != b.id || a.ref_classes != b.ref_classes)
      metric_fail("transition: traces are not aligned at row " + std::to_string(i));
    const std::set<int> pa(a.pred_classes.begin(), a.pred_classes.end());
    const std::set<int> pb(b.pred_classes.begin(), b.pred_classes.end());
    std::array<bool, 4> present{};
    for (int c : a.ref_classes) {
      const bool ca = pa.count(c) > 0, cb = pb.count(c) > 0;
      const int cat = ca ? (cb ? kC2C : kC2W) : (cb ? kW2C : kW2W);
      ++rep.count[static_cast<std::size_t>(cat)];
      present[static_cast<std::size_t>(cat)] = true;
      ++sources;
    }
    for (std::size_t k = 0; k < 4; ++k) {
      if (!present[k]) continue;
      delta_sum[k] += b.ca_sdri - a.ca_sdri;
      ++delta_n[k];
    }
  }
  if (sources == 0) metric_fail("transition: no reference sources");
  for (std::size_t k = 0; k < 4; ++k) {
    rep.ratio_pct[k] = 100.0 * static_cast<double>(rep.count[k]) / static_cast<double>(sources);
    rep.delta_ca_sdri[k] = delta_n[k] ? delta_sum[k] / static_cast<double>(delta_n[k]) : 0.0;
  }
  return rep;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return "";
  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  std::vector<std::size_t> width(cols, 0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());

  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      out += rows[i][c];
      if (c + 1 < rows[i].size())
        out.append(width[c] - rows[i][c].size() + 2, ' ');
    }
    out += '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < cols; ++c) total += width[c] + (c + 1 < cols ? 2 : 0);
      out.append(total, '-');
      out += '\n';
    }
  }
  return out;
}

}  // namespace scenesep
