// src/dpc.cpp

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

#include "scenesep/dpc.hpp"

#include <cmath>
#include <string>

namespace scenesep {

using tg::Index;
using tg::Tensor;

tg::Tensor align_m2d_temporal(const tg::Tensor& m2d, Index t_len) {
  if (m2d.rank() != 3) tg::fail("align_m2d_temporal", "feature must be [G,F,T]");
  Tensor pooled = tg::mean_axis(m2d, 1);  // [G, T_m2d]
  return tg::bilinear_resample_1d(pooled, t_len);
}

tg::Tensor align_m2d_frequency(const tg::Tensor& m2d, Index f_len) {
  if (m2d.rank() != 3) tg::fail("align_m2d_frequency", "feature must be [G,F,T]");
  Tensor pooled = tg::mean_axis(m2d, 2);  // [G, F_m2d]
  return tg::bilinear_resample_1d(pooled, f_len);
}

namespace {

// Per-step concat of a [L, a] sequence with an aligned [G, L] embedder
// feature, then one linear map to the fused width.
Tensor feature_fuse(const Tensor& seq, const Tensor& m2d, const Tensor& w, const Tensor& b) {
  if (m2d.dim(1) != seq.dim(0))
    tg::fail("feature_fuse", "sequence length " + std::to_string(seq.dim(0)) +
                                 " does not match aligned feature " + std::to_string(m2d.dim(1)));
  Tensor cat = tg::concat<float>({seq, tg::permute(m2d, {1, 0})}, 1);
  return tg::linear(cat, w, b);
}

Tensor bigru_pool(const Tensor& seq, const tg::GruWeights& fwd, const tg::GruWeights& bwd,
                  const tg::AspParams& asp_params, Tensor* gru_out = nullptr) {
  const Index steps = seq.dim(0), d = seq.dim(1);
  Tensor h = tg::gru(tg::reshape(seq, {steps, 1, d}), fwd, &bwd);
  Tensor flat = tg::reshape(h, {steps, 2 * fwd.hidden()});
  if (gru_out) *gru_out = flat;
  return tg::asp(flat, asp_params);
}

Tensor conv_block(const Tensor& x, const Tensor& w, const Tensor& b,
                  std::pair<Index, Index> pool) {
  Tensor h = tg::relu(tg::conv2d(x, w, b, {1, 1}, {1, 1}));
  return tg::pool2d(h, tg::PoolKind::kAvg, pool, pool);
}

}  // namespace

void DpcModel::init(std::uint64_t seed) {
  tg::Rng rng(seed, 0);
  const Index d = kSepChannels;
  auto conv = [&rng](Index co, Index ci, Index kh, Index kw) {
    const float s = 1.0f / std::sqrt(static_cast<float>(ci * kh * kw));
    return Tensor::randn({co, ci, kh, kw}, rng, s, true);
  };
  auto lin = [&rng](Index m, Index n) {
    return Tensor::randn({m, n}, rng, 1.0f / std::sqrt(static_cast<float>(n)), true);
  };
  auto bias = [](Index m) { return Tensor::zeros({m}, true); };

  t_conv1_w = conv(d, d, 3, 3);
  t_conv1_b = bias(d);
  t_conv2_w = conv(d, d, 3, 3);
  t_conv2_b = bias(d);
  f_conv1_w = conv(d, d, 3, 3);
  f_conv1_b = bias(d);
  f_conv2_w = conv(d, d, 3, 3);
  f_conv2_b = bias(d);
  f_pw_w = conv(2 * d, d, 1, 1);
  f_pw_b = bias(2 * d);

  const Index g = EmbedderStubs::kG;
  const Index f_t = kSepFreq / 2 / 8;  // frequency extent after the two pools
  fuse_t_w = lin(kDpcHidden, d * f_t + g);
  fuse_t_b = bias(kDpcHidden);
  fuse_f_w = lin(kDpcHidden, 2 * d + g);
  fuse_f_b = bias(kDpcHidden);

  t_gru_fwd = tg::GruWeights::init(kDpcHidden, kDpcGruHidden, rng);
  t_gru_bwd = tg::GruWeights::init(kDpcHidden, kDpcGruHidden, rng);
  f_gru_fwd = tg::GruWeights::init(kDpcHidden, kDpcGruHidden, rng);
  f_gru_bwd = tg::GruWeights::init(kDpcHidden, kDpcGruHidden, rng);
  t_asp = tg::AspParams::init(2 * kDpcGruHidden, kDpcHidden, rng);
  f_asp = tg::AspParams::init(2 * kDpcGruHidden, kDpcHidden, rng);

  head_w = lin(kDpcLogits, 2 * (4 * kDpcGruHidden));
  head_b = bias(kDpcLogits);
  onoff_w = lin(1, 2 * kDpcGruHidden);
  onoff_b = bias(1);
}

DpcForward DpcModel::forward(const Tensor& object, const Tensor& m2d) const {
  if (object.rank() != 3 || object.dim(0) != kSepChannels)
    tg::fail("dpc", "object feature must be [D,F,T] with D=" + std::to_string(kSepChannels));
  const Index d = object.dim(0);

  // Temporal path: frequency is compressed 16x, time halved, then each frame
  // becomes one sequence step of width D * F_t.
  Tensor t = conv_block(object, t_conv1_w, t_conv1_b, {2, 2});
  t = conv_block(t, t_conv2_w, t_conv2_b, {8, 1});
  const Index f_t = t.dim(1), t_t = t.dim(2);
  Tensor t_seq = tg::reshape(tg::permute(t, {2, 0, 1}), {t_t, d * f_t});

  // Frequency path: pointwise doubling then a time average leaves a
  // frequency-indexed sequence of width 2D.
  Tensor f = conv_block(object, f_conv1_w, f_conv1_b, {2, 2});
  f = conv_block(f, f_conv2_w, f_conv2_b, {2, 1});
  f = tg::conv2d(f, f_pw_w, f_pw_b);
  Tensor f_seq = tg::mean_axis(tg::permute(f, {1, 0, 2}), 2);  // [F_f, 2D]

  Tensor t_fused = feature_fuse(t_seq, align_m2d_temporal(m2d, t_t), fuse_t_w, fuse_t_b);
  Tensor f_fused = feature_fuse(f_seq, align_m2d_frequency(m2d, f_seq.dim(0)), fuse_f_w, fuse_f_b);

  Tensor t_gru_out;
  Tensor t_emb = bigru_pool(t_fused, t_gru_fwd, t_gru_bwd, t_asp, &t_gru_out);
  Tensor f_emb = bigru_pool(f_fused, f_gru_fwd, f_gru_bwd, f_asp);

  DpcForward out;
  out.logits = tg::linear(tg::concat<float>({t_emb, f_emb}, 0), head_w, head_b);
  out.frame_probs = tg::reshape(tg::sigmoid(tg::linear(t_gru_out, onoff_w, onoff_b)), {t_t});
  return out;
}

ClassPrediction DpcModel::classify(const Tensor& object, const Tensor& m2d) const {
  DpcForward fw = forward(object, m2d);
  ClassPrediction p;
  p.logits = fw.logits.impl()->data;
  p.frame_probs = fw.frame_probs.impl()->data;
  float peak = 0.0f;
  for (float v : p.frame_probs) peak = std::max(peak, v);
  p.is_on = peak > 0.5f;
  p.best_class = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (p.logits[static_cast<std::size_t>(c)] > p.logits[static_cast<std::size_t>(p.best_class)])
      p.best_class = c;
  return p;
}

ParamRegistry DpcModel::params() const {
  ParamRegistry r;
  auto add_gru = [&r](const std::string& p, const tg::GruWeights& w) {
    r.add(p + ".wi", w.w_input);
    r.add(p + ".wh", w.w_hidden);
    r.add(p + ".bi", w.b_input);
    r.add(p + ".bh", w.b_hidden);
  };
  auto add_asp = [&r](const std::string& p, const tg::AspParams& a) {
    r.add(p + ".wh", a.w_hidden);
    r.add(p + ".bh", a.b_hidden);
    r.add(p + ".ws", a.w_score);
    r.add(p + ".bs", a.b_score);
  };
  r.add("t.conv1.w", t_conv1_w);
  r.add("t.conv1.b", t_conv1_b);
  r.add("t.conv2.w", t_conv2_w);
  r.add("t.conv2.b", t_conv2_b);
  r.add("f.conv1.w", f_conv1_w);
  r.add("f.conv1.b", f_conv1_b);
  r.add("f.conv2.w", f_conv2_w);
  r.add("f.conv2.b", f_conv2_b);
  r.add("f.pw.w", f_pw_w);
  r.add("f.pw.b", f_pw_b);
  r.add("fuse_t.w", fuse_t_w);
  r.add("fuse_t.b", fuse_t_b);
  r.add("fuse_f.w", fuse_f_w);
  r.add("fuse_f.b", fuse_f_b);
  add_gru("t.gru_fwd", t_gru_fwd);
  add_gru("t.gru_bwd", t_gru_bwd);
  add_gru("f.gru_fwd", f_gru_fwd);
  add_gru("f.gru_bwd", f_gru_bwd);
  add_asp("t.asp", t_asp);
  add_asp("f.asp", f_asp);
  r.add("head.w", head_w);
  r.add("head.b", head_b);
  r.add("onoff.w", onoff_w);
  r.add("onoff.b", onoff_b);
  return r;
}

std::map<std::string, std::string> DpcModel::meta() const {
  return {{"model", "dpc"},
          {"channels", std::to_string(kSepChannels)},
          {"hidden", std::to_string(kDpcHidden)},
          {"gru_hidden", std::to_string(kDpcGruHidden)},
          {"logits", std::to_string(kDpcLogits)}};
}

void DpcModel::check_meta(const std::map<std::string, std::string>& m) const {
  check_meta_matches(meta(), m);
}

}  // namespace scenesep
