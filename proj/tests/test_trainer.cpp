// tests/test_trainer.cpp

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

// Optimizer oracle, slot matching, activity targets, PIT loss selection,
// freezing guarantees, and a short overfit run of the clueless separator.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "scenesep/losses.hpp"
#include "scenesep/metrics.hpp"
#include "scenesep/trainer.hpp"
#include "test_util.hpp"

namespace tg = scenesep::tg;
using scenesep::AdamW;
using scenesep::AdamWConfig;
using scenesep::SceneRecord;
using scenesep::TrainConfig;
using scenesep::TrainStats;
using tg::Index;
using tg::Tensor;

namespace {

// 1280 samples: hop-aligned (512 + 3*256) and quick to separate.
SceneRecord tiny_scene(std::vector<int> classes, std::uint64_t seed) {
  SceneRecord rec;
  rec.spec.duration = 0.08;
  rec.spec.class_ids = std::move(classes);
  rec.spec.fg_snr_db.assign(rec.spec.class_ids.size(), 6.0);
  rec.spec.seed = seed;
  rec.scene = scenesep::synth_scene(rec.spec);
  return rec;
}

std::vector<float> snapshot(const scenesep::ParamRegistry& reg) {
  std::vector<float> out;
  for (const auto& [name, t] : reg.items())
    out.insert(out.end(), t.impl()->data.begin(), t.impl()->data.end());
  return out;
}

}  // namespace

TEST_CASE("adamw: first two steps match the update formula") {
  auto p = Tensor::from_data({2}, {1.0f, 2.0f}, true);
  AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.0;
  AdamW opt({p}, cfg);

  const double g[2] = {0.1, -0.2};
  double m[2] = {0, 0}, v[2] = {0, 0}, want[2] = {1.0, 2.0};
  for (int t = 1; t <= 2; ++t) {
    p.impl()->grad.assign(2, 0.0f);
    p.impl()->grad[0] = static_cast<float>(g[0]);
    p.impl()->grad[1] = static_cast<float>(g[1]);
    opt.step();
    for (int j = 0; j < 2; ++j) {
      m[j] = 0.9 * m[j] + 0.1 * g[j];
      v[j] = 0.999 * v[j] + 0.001 * g[j] * g[j];
      const double mh = m[j] / (1.0 - std::pow(0.9, t));
      const double vh = v[j] / (1.0 - std::pow(0.999, t));
      want[j] -= 0.1 * (mh / (std::sqrt(vh) + 1e-8));
      CHECK(p.data()[j] == doctest::Approx(want[j]).epsilon(1e-6));
    }
  }
  CHECK(opt.steps_taken() == 2);

  // zero_grad drops the buffers; a gradless step applies decay only.
  opt.zero_grad();
  CHECK(p.impl()->grad.empty());
  AdamWConfig decay;
  decay.lr = 0.1;
  decay.weight_decay = 0.01;
  auto q = Tensor::from_data({1}, {5.0f}, true);
  AdamW opt2({q}, decay);
  opt2.step();
  CHECK(q.data()[0] == doctest::Approx(5.0 * (1.0 - 0.1 * 0.01)).epsilon(1e-7));
}

TEST_CASE("match_slots: injective best-SNR assignment") {
  tg::Rng rng(1, 90);
  std::vector<float> r0(64), r1(64);
  for (auto& v : r0) v = static_cast<float>(rng.normal());
  for (auto& v : r1) v = static_cast<float>(rng.normal());
  auto near = [&](const std::vector<float>& r) {
    std::vector<float> e = r;
    for (auto& v : e) v += 0.01f * static_cast<float>(rng.normal());
    return e;
  };
  // Slot 0 holds ref 1, slot 1 is silent, slot 2 holds ref 0.
  std::vector<std::vector<float>> est = {near(r1), std::vector<float>(64, 0.0f), near(r0)};
  CHECK(scenesep::match_slots(est, {r0, r1}) == std::vector<int>{1, -1, 0});
  CHECK(scenesep::match_slots(est, {r1}) == std::vector<int>{0, -1, -1});
  CHECK_THROWS_AS(scenesep::match_slots({est[0]}, {r0, r1}), std::invalid_argument);
}

TEST_CASE("frame_activity thresholds chunk RMS at -40 dBFS") {
  const std::vector<float> ref = {0.5f, 0.5f, 0.0f, 0.0f, 0.02f, 0.0f, 0.001f, 0.001f};
  CHECK(scenesep::frame_activity(ref, 4) == std::vector<float>{1, 0, 1, 0});
  CHECK(scenesep::frame_activity(ref, 1) == std::vector<float>{1});
  CHECK(scenesep::frame_activity(std::vector<float>(8, 0.0f), 2) == std::vector<float>{0, 0});
  CHECK_THROWS_AS(scenesep::frame_activity(ref, 0), std::invalid_argument);
}

TEST_CASE("separation_loss splits matched and silent slots") {
  tg::Rng rng(2, 91);
  std::vector<float> ref(32), mix(32);
  for (auto& v : ref) v = static_cast<float>(rng.normal());
  for (std::size_t i = 0; i < mix.size(); ++i)
    mix[i] = ref[i] + 0.5f * static_cast<float>(rng.normal());
  auto est0 = Tensor::randn({32}, rng, 1.0f, true);
  auto est1 = Tensor::randn({32}, rng, 1.0f, true);

  Tensor loss = scenesep::separation_loss({est0, est1}, {0, -1}, {ref}, mix);
  double mix_e = 0.0;
  for (float v : mix) mix_e += static_cast<double>(v) * v;
  const float want = 0.5f * (tg::snr_loss(ref, est0).item() +
                             tg::silent_energy_loss(est1, static_cast<float>(mix_e)).item());
  CHECK(loss.item() == doctest::Approx(want).epsilon(1e-6));

  loss.backward(true);
  CHECK(est0.impl()->grad.size() == 32);
  CHECK(est1.impl()->grad.size() == 32);

  CHECK_THROWS_AS(scenesep::separation_loss({est0}, {0, -1}, {ref}, mix),
                  std::invalid_argument);
}

TEST_CASE("train_uss: first recorded loss is the cheapest slot placement") {
  SceneRecord rec = tiny_scene({2, 10}, 5);
  const std::vector<float> mix0 = rec.scene.mixture.channel_vec(0);
  std::vector<std::vector<float>> refs;
  for (const auto& [c, wav] : rec.scene.fg_refs) refs.push_back(wav);

  // Hand-minimize over all injective placements on an identical twin model.
  scenesep::UssModel twin(9);
  scenesep::SeparatorOutput out = twin.forward(rec.scene.mixture);
  double mix_e = 0.0;
  for (float v : mix0) mix_e += static_cast<double>(v) * v;
  double best = 1e300;
  std::vector<std::size_t> order = {0, 1, 2};
  do {
    std::vector<int> assign(3, -1);
    for (std::size_t j = 0; j < refs.size(); ++j) assign[order[j]] = static_cast<int>(j);
    double value = 0.0;
    for (std::size_t s = 0; s < 3; ++s)
      value += assign[s] >= 0
                   ? tg::snr_loss(refs[static_cast<std::size_t>(assign[s])],
                                  out.waveforms[s]).item()
                   : tg::silent_energy_loss(out.waveforms[s], static_cast<float>(mix_e)).item();
    best = std::min(best, value / 3.0);
  } while (std::next_permutation(order.begin(), order.end()));

  scenesep::UssModel model(9);
  TrainConfig cfg;
  cfg.steps = 1;
  cfg.lr = 1e-3;
  TrainStats stats = scenesep::train_uss(model, {rec}, cfg);
  REQUIRE(stats.losses.size() == 1);
  CHECK(stats.losses[0] == doctest::Approx(best).epsilon(1e-5));

  CHECK_THROWS_AS(scenesep::train_uss(model, {}, cfg), std::invalid_argument);
}

TEST_CASE("train_uss: short overfit beats the mixture on a two-source scene") {
  SceneRecord rec = tiny_scene({3, 12}, 6);
  scenesep::UssModel model(11);
  TrainConfig cfg;
  cfg.steps = 150;
  cfg.lr = 2e-3;
  TrainStats stats = scenesep::train_uss(model, {rec}, cfg);
  CHECK(stats.mean_tail(10) < stats.mean_head(10));

  const std::vector<float> mix0 = rec.scene.mixture.channel_vec(0);
  std::vector<std::vector<float>> refs, est;
  for (const auto& [c, wav] : rec.scene.fg_refs) refs.push_back(wav);
  for (const auto& wav : model.forward(rec.scene.mixture).waveforms)
    est.push_back(wav.impl()->data);
  std::vector<int> assign = scenesep::match_slots(est, refs);
  double snri = 0.0;
  int matched = 0;
  for (std::size_t s = 0; s < est.size(); ++s) {
    if (assign[s] < 0) continue;
    snri += scenesep::sdri(est[s], refs[static_cast<std::size_t>(assign[s])], mix0);
    ++matched;
  }
  REQUIRE(matched == 2);
  CHECK(snri / matched > 0.0);
}

TEST_CASE("train stats helpers and csv logging") {
  TrainStats stats;
  stats.losses = {1.0, 2.0, 3.0, 4.0};
  CHECK(stats.mean_head(2) == doctest::Approx(1.5));
  CHECK(stats.mean_tail(2) == doctest::Approx(3.5));
  CHECK(stats.mean_head(10) == doctest::Approx(2.5));  // clamps to size
  CHECK(TrainStats{}.mean_tail(3) == 0.0);

  scenesep_test::TempDir tmp;
  SceneRecord rec = tiny_scene({1}, 7);
  scenesep::UssModel model(12);
  TrainConfig cfg;
  cfg.steps = 3;
  cfg.loss_csv = tmp.file("loss.csv");
  TrainStats stats2 = scenesep::train_uss(model, {rec}, cfg);
  std::ifstream csv(cfg.loss_csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  REQUIRE(lines.size() == 4);  // header + one row per step
  CHECK(lines[0] == "step,loss");
  CHECK(lines[1].substr(0, 2) == "0,");
  CHECK(lines[3].substr(0, 2) == "2,");
}

TEST_CASE("train_tse freezes the clueless separator") {
  SceneRecord rec = tiny_scene({5, 9}, 8);
  scenesep::UssModel uss(13);
  scenesep::TseModel tse(14);
  const std::vector<float> uss_before = snapshot(uss.params());
  const std::vector<float> tse_before = snapshot(tse.params());

  TrainConfig cfg;
  cfg.steps = 2;
  TrainStats stats = scenesep::train_tse(tse, uss, {rec}, cfg);
  CHECK(stats.losses.size() == 2);
  CHECK(snapshot(uss.params()) == uss_before);
  CHECK(snapshot(tse.params()) != tse_before);
}

TEST_CASE("train_dpc freezes both separators") {
  SceneRecord rec = tiny_scene({6}, 9);
  scenesep::UssModel uss(15);
  scenesep::TseModel tse(16);
  scenesep::DpcModel dpc;
  dpc.init(17);
  const std::vector<float> uss_before = snapshot(uss.params());
  const std::vector<float> tse_before = snapshot(tse.params());
  const std::vector<float> dpc_before = snapshot(dpc.params());

  TrainConfig cfg;
  cfg.steps = 2;
  cfg.lr = 4e-4;
  TrainStats s1 = scenesep::train_dpc(dpc, uss, nullptr, {rec}, cfg);
  CHECK(s1.losses.size() == 2);
  CHECK(snapshot(uss.params()) == uss_before);
  CHECK(snapshot(dpc.params()) != dpc_before);

  scenesep::DpcModel dpc2;
  dpc2.init(18);
  TrainStats s2 = scenesep::train_dpc(dpc2, uss, &tse, {rec}, cfg);
  CHECK(s2.losses.size() == 2);
  CHECK(snapshot(uss.params()) == uss_before);
  CHECK(snapshot(tse.params()) == tse_before);
}

TEST_CASE("train_sce moves only the clue encoder") {
  SceneRecord rec = tiny_scene({4, 13}, 10);
  scenesep::UssModel uss(19);
  scenesep::TseModel tse(20);
  scenesep::DpcModel dpc;
  dpc.init(21);
  scenesep::SceModel sce;
  sce.init(22);

  const std::vector<float> uss_before = snapshot(uss.params());
  const std::vector<float> tse_before = snapshot(tse.params());
  const std::vector<float> dpc_before = snapshot(dpc.params());
  const std::vector<float> sce_before = snapshot(sce.params());

  TrainConfig cfg;
  cfg.steps = 2;
  cfg.lr = 1e-4;
  TrainStats stats =
      scenesep::train_sce(sce, uss, tse, dpc, {rec}, scenesep::EmbeddingKind::kClapText, cfg);
  CHECK(stats.losses.size() == 2);
  for (double l : stats.losses) CHECK(std::isfinite(l));
  CHECK(snapshot(uss.params()) == uss_before);
  CHECK(snapshot(tse.params()) == tse_before);
  CHECK(snapshot(dpc.params()) == dpc_before);
  CHECK(snapshot(sce.params()) != sce_before);

  // The zero-initialized film heads have moved off zero.
  bool head_moved = false;
  for (const auto& h : sce.heads)
    for (Index i = 0; i < h.w2.numel() && !head_moved; ++i)
      head_moved = h.w2.data()[i] != 0.0f || h.w1.data()[i] != 0.0f;
  CHECK(head_moved);
}
