// src/trainer.cpp

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

#include "scenesep/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "scenesep/losses.hpp"

namespace scenesep {

using tg::Index;
using tg::Tensor;

AdamW::AdamW(std::vector<tg::Tensor> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::size_t n = params_[i].impl()->data.size();
    m_[i].assign(n, 0.0f);
    v_[i].assign(n, 0.0f);
  }
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto impl = params_[i].impl();
    const bool has_grad = impl->grad.size() == impl->data.size();
    for (std::size_t j = 0; j < impl->data.size(); ++j) {
      const double g = has_grad ? static_cast<double>(impl->grad[j]) : 0.0;
      const double m = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
      const double v = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
      m_[i][j] = static_cast<float>(m);
      v_[i][j] = static_cast<float>(v);
      const double update = (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps) +
                            cfg_.weight_decay * impl->data[j];
      impl->data[j] -= static_cast<float>(cfg_.lr * update);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.impl()->grad.clear();
}

void set_trainable(const ParamRegistry& reg, bool trainable) {
  for (const auto& [name, t] : reg.items()) t.impl()->requires_grad = trainable;
}

double TrainStats::mean_head(std::size_t n) const {
  n = std::min(n, losses.size());
  if (n == 0) return 0.0;
  return std::accumulate(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(n), 0.0) /
         static_cast<double>(n);
}

double TrainStats::mean_tail(std::size_t n) const {
  n = std::min(n, losses.size());
  if (n == 0) return 0.0;
  return std::accumulate(losses.end() - static_cast<std::ptrdiff_t>(n), losses.end(), 0.0) /
         static_cast<double>(n);
}

namespace {

double energy(const std::vector<float>& x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

std::vector<std::vector<float>> scene_refs(const Scene& scene) {
  std::vector<std::vector<float>> refs;
  refs.reserve(scene.fg_refs.size());
  for (const auto& [c, wav] : scene.fg_refs) refs.push_back(wav);
  return refs;
}

// The trainer-side matching score; mirrors the evaluation SDR up to the
// shared epsilon cap, computed on plain values (no graph).
double match_score(const std::vector<float>& est, const std::vector<float>& ref) {
  const double ref_e = energy(ref);
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = static_cast<double>(ref[i]) - est[i];
    err += d * d;
  }
  return 10.0 * std::log10(ref_e / (err + 1e-8 * ref_e));
}

std::vector<float> values_of(const Tensor& t) { return t.impl()->data; }

// Runs one training loop: per-step loss, finiteness guard, optional CSV log.
TrainStats run_loop(const TrainConfig& cfg, const std::string& tag,
                    const std::function<double(std::int64_t)>& step_fn) {
  if (cfg.steps < 1) throw std::invalid_argument(tag + ": steps must be >= 1");
  std::ofstream csv;
  if (!cfg.loss_csv.empty()) {
    csv.open(cfg.loss_csv);
    if (!csv) throw std::runtime_error(tag + ": cannot write " + cfg.loss_csv);
    csv << "step,loss\n";
    csv.precision(9);
  }
  TrainStats stats;
  stats.losses.reserve(static_cast<std::size_t>(cfg.steps));
  for (std::int64_t s = 0; s < cfg.steps; ++s) {
    const double loss = step_fn(s);
    if (!std::isfinite(loss))
      throw std::runtime_error(tag + ": non-finite loss " + std::to_string(loss) + " at step " +
                               std::to_string(s));
    stats.losses.push_back(loss);
    if (csv.is_open()) csv << s << "," << loss << "\n";
  }
  return stats;
}

AdamWConfig opt_config(const TrainConfig& cfg) {
  AdamWConfig oc;
  oc.lr = cfg.lr;
  oc.weight_decay = cfg.weight_decay;
  return oc;
}

}  // namespace

std::vector<int> match_slots(const std::vector<std::vector<float>>& estimates,
                             const std::vector<std::vector<float>>& refs) {
  const std::size_t slots = estimates.size(), k = refs.size();
  if (k > slots) throw std::invalid_argument("match_slots: more references than slots");
  std::vector<std::size_t> order(slots);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> best(slots, -1);
  double best_score = -1e300;
  do {
    double score = 0.0;
    for (std::size_t j = 0; j < k; ++j) score += match_score(estimates[order[j]], refs[j]);
    if (score > best_score) {
      best_score = score;
      std::fill(best.begin(), best.end(), -1);
      for (std::size_t j = 0; j < k; ++j) best[order[j]] = static_cast<int>(j);
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

std::vector<float> frame_activity(const std::vector<float>& ref, std::int64_t frames) {
  if (frames < 1) throw std::invalid_argument("frame_activity: frames must be >= 1");
  const auto n = static_cast<std::int64_t>(ref.size());
  std::vector<float> act(static_cast<std::size_t>(frames), 0.0f);
  constexpr double kOnRms = 0.01;  // -40 dBFS
  for (std::int64_t f = 0; f < frames; ++f) {
    const std::int64_t a = f * n / frames, b = (f + 1) * n / frames;
    if (b <= a) continue;
    double e = 0.0;
    for (std::int64_t i = a; i < b; ++i) e += static_cast<double>(ref[i]) * ref[i];
    if (std::sqrt(e / static_cast<double>(b - a)) > kOnRms) act[static_cast<std::size_t>(f)] = 1.0f;
  }
  return act;
}

tg::Tensor separation_loss(const std::vector<tg::Tensor>& estimates,
                           const std::vector<int>& slot_to_ref,
                           const std::vector<std::vector<float>>& refs,
                           const std::vector<float>& mix_ch0) {
  if (estimates.empty() || slot_to_ref.size() != estimates.size())
    throw std::invalid_argument("separation_loss: slot assignment size mismatch");
  const auto mix_e = static_cast<float>(energy(mix_ch0));
  Tensor total;
  for (std::size_t s = 0; s < estimates.size(); ++s) {
    const int r = slot_to_ref[s];
    Tensor term = r >= 0 ? tg::snr_loss(refs[static_cast<std::size_t>(r)], estimates[s])
                         : tg::silent_energy_loss(estimates[s], mix_e);
    total = s == 0 ? term : tg::add(total, term);
  }
  return tg::scale(total, 1.0f / static_cast<float>(estimates.size()));
}

TrainStats train_uss(UssModel& uss, const std::vector<SceneRecord>& train,
                     const TrainConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("train_uss: empty dataset");
  set_trainable(uss.params(), true);
  AdamW opt(uss.params().tensors(), opt_config(cfg));

  return run_loop(cfg, "train_uss", [&](std::int64_t step) {
    const SceneRecord& rec = train[static_cast<std::size_t>(step) % train.size()];
    const std::vector<float> mix0 = rec.scene.mixture.channel_vec(0);
    const std::vector<std::vector<float>> refs = scene_refs(rec.scene);
    SeparatorOutput out = uss.forward(rec.scene.mixture);

    // Permutation-invariant training: build every candidate per-slot loss
    // node once, pick the cheapest injective placement of the references by
    // total value (silence penalties included), and train only that one.
    const std::size_t slots = out.waveforms.size(), k = refs.size();
    const auto mix_e = static_cast<float>(energy(mix0));
    std::vector<std::vector<Tensor>> pair_loss(slots);
    std::vector<Tensor> sil_loss(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      sil_loss[s] = tg::silent_energy_loss(out.waveforms[s], mix_e);
      pair_loss[s].resize(k);
      for (std::size_t j = 0; j < k; ++j)
        pair_loss[s][j] = tg::snr_loss(refs[j], out.waveforms[s]);
    }
    auto term = [&](std::size_t s, int r) -> const Tensor& {
      return r >= 0 ? pair_loss[s][static_cast<std::size_t>(r)] : sil_loss[s];
    };

    std::vector<std::size_t> order(slots);
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> best;
    double best_value = 0.0;
    do {
      std::vector<int> assign(slots, -1);
      for (std::size_t j = 0; j < k; ++j) assign[order[j]] = static_cast<int>(j);
      double value = 0.0;
      for (std::size_t s = 0; s < slots; ++s)
        value += static_cast<double>(term(s, assign[s]).impl()->data[0]);
      if (best.empty() || value < best_value) {
        best = assign;
        best_value = value;
      }
    } while (std::next_permutation(order.begin(), order.end()));

    Tensor total;
    for (std::size_t s = 0; s < slots; ++s)
      total = s == 0 ? term(s, best[s]) : tg::add(total, term(s, best[s]));
    Tensor loss = tg::scale(total, 1.0f / static_cast<float>(slots));
    opt.zero_grad();
    loss.backward();
    opt.step();
    return static_cast<double>(loss.impl()->data[0]);
  });
}

TrainStats train_tse(TseModel& tse, const UssModel& frozen_uss,
                     const std::vector<SceneRecord>& train, const TrainConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("train_tse: empty dataset");
  set_trainable(frozen_uss.params(), false);
  set_trainable(tse.params(), true);
  AdamW opt(tse.params().tensors(), opt_config(cfg));

  return run_loop(cfg, "train_tse", [&](std::int64_t step) {
    const SceneRecord& rec = train[static_cast<std::size_t>(step) % train.size()];
    const std::vector<float> mix0 = rec.scene.mixture.channel_vec(0);
    const std::vector<std::vector<float>> refs = scene_refs(rec.scene);

    SeparatorOutput stage1 = frozen_uss.forward(rec.scene.mixture);
    std::array<std::vector<float>, kSlots> enroll;
    std::vector<std::vector<float>> enroll_list;
    for (std::size_t s = 0; s < enroll.size(); ++s) {
      enroll[s] = values_of(stage1.waveforms[s]);
      enroll_list.push_back(enroll[s]);
    }
    // Slot s is evaluated against whatever its enrollment resembles most, so
    // the extractor learns "keep the enrolled source".
    const std::vector<int> assign = match_slots(enroll_list, refs);

    SeparatorOutput out = tse.forward(rec.scene.mixture, enroll);
    Tensor loss = separation_loss(out.waveforms, assign, refs, mix0);
    opt.zero_grad();
    loss.backward();
    opt.step();
    return static_cast<double>(loss.impl()->data[0]);
  });
}

TrainStats train_dpc(DpcModel& dpc, const UssModel& frozen_uss, const TseModel* frozen_tse,
                     const std::vector<SceneRecord>& train, const TrainConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("train_dpc: empty dataset");
  set_trainable(frozen_uss.params(), false);
  if (frozen_tse) set_trainable(frozen_tse->params(), false);
  set_trainable(dpc.params(), true);
  AdamW opt(dpc.params().tensors(), opt_config(cfg));
  const EmbedderStubs& stubs = embedder_stubs();

  return run_loop(cfg, "train_dpc", [&](std::int64_t step) {
    const SceneRecord& rec = train[static_cast<std::size_t>(step) % train.size()];
    const std::vector<std::vector<float>> refs = scene_refs(rec.scene);

    SeparatorOutput out = frozen_uss.forward(rec.scene.mixture);
    if (frozen_tse) {
      std::array<std::vector<float>, kSlots> enroll;
      for (std::size_t s = 0; s < enroll.size(); ++s) enroll[s] = values_of(out.waveforms[s]);
      out = frozen_tse->forward(rec.scene.mixture, enroll);
    }

    std::vector<std::vector<float>> est;
    for (const auto& w : out.waveforms) est.push_back(values_of(w));
    const std::vector<int> assign = match_slots(est, refs);

    Tensor total;
    for (std::size_t s = 0; s < out.objects.size(); ++s) {
      Tensor m2d = stubs.audio_features(est[s]);
      DpcForward fw = dpc.forward(out.objects[s], m2d);
      const std::int64_t frames = fw.frame_probs.dim(0);
      Tensor class_loss;
      std::vector<float> act;
      if (assign[s] >= 0) {
        const auto r = static_cast<std::size_t>(assign[s]);
        class_loss = tg::cross_entropy(fw.logits, rec.scene.fg_refs[r].first);
        act = frame_activity(refs[r], frames);
      } else {
        class_loss = tg::kl_uniform(fw.logits);
        act.assign(static_cast<std::size_t>(frames), 0.0f);
      }
      Tensor slot_loss = tg::add(class_loss, tg::bce(fw.frame_probs, act));
      total = s == 0 ? slot_loss : tg::add(total, slot_loss);
    }
    Tensor loss = tg::scale(total, 1.0f / static_cast<float>(out.objects.size()));
    opt.zero_grad();
    loss.backward();
    opt.step();
    return static_cast<double>(loss.impl()->data[0]);
  });
}

TrainStats train_sce(SceModel& sce, const UssModel& frozen_uss, const TseModel& frozen_tse,
                     const DpcModel& frozen_dpc_uss, const std::vector<SceneRecord>& train,
                     EmbeddingKind kind, const TrainConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("train_sce: empty dataset");
  set_trainable(frozen_uss.params(), false);
  set_trainable(frozen_tse.params(), false);
  set_trainable(frozen_dpc_uss.params(), false);
  set_trainable(sce.params(), true);
  AdamW opt(sce.params().tensors(), opt_config(cfg));
  const EmbedderStubs& stubs = embedder_stubs();

  return run_loop(cfg, "train_sce", [&](std::int64_t step) {
    const SceneRecord& rec = train[static_cast<std::size_t>(step) % train.size()];
    const std::vector<float> mix0 = rec.scene.mixture.channel_vec(0);
    const std::vector<std::vector<float>> refs = scene_refs(rec.scene);

    // Stage-1 inference exactly as the pipeline runs it.
    SeparatorOutput stage1 = frozen_uss.forward(rec.scene.mixture);
    std::array<std::vector<float>, kSlots> enroll;
    std::vector<std::vector<float>> enroll_list;
    std::vector<ClassPrediction> preds;
    for (std::size_t s = 0; s < enroll.size(); ++s) {
      enroll[s] = values_of(stage1.waveforms[s]);
      enroll_list.push_back(enroll[s]);
      preds.push_back(
          frozen_dpc_uss.classify(stage1.objects[s], stubs.audio_features(enroll[s])));
    }
    const ClueSet clues = derive_clues(preds, enroll_list, kind);
    const std::vector<FilmParams> film = sce.film(sce.encode(clues));

    const std::vector<int> assign = match_slots(enroll_list, refs);
    SeparatorOutput out = frozen_tse.forward(rec.scene.mixture, enroll, &film);
    Tensor loss = separation_loss(out.waveforms, assign, refs, mix0);
    opt.zero_grad();
    loss.backward();
    opt.step();
    return static_cast<double>(loss.impl()->data[0]);
  });
}

}  // namespace scenesep
