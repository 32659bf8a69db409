// src/separator.cpp

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

#include "scenesep/separator.hpp"

namespace scenesep {

using tg::Index;
using tg::Tensor;

Tensor residual_film(const Tensor& x, const FilmParams& p) {
  return tg::add(x, tg::add_channel(tg::mul_channel(x, p.beta1), p.beta2));
}

Tensor stft_frontend(const std::vector<std::vector<float>>& channels, const tg::StftConfig& cfg) {
  if (channels.empty()) tg::fail("stft_frontend", "no channels");
  std::vector<Tensor> rows;
  for (const auto& ch : channels) {
    if (ch.size() != channels[0].size()) tg::fail("stft_frontend", "unequal channel lengths");
    auto [re, im] = tg::stft_tensors(ch, cfg);
    rows.push_back(tg::reshape(re, {1, re.dim(0), re.dim(1)}));
    rows.push_back(tg::reshape(im, {1, im.dim(0), im.dim(1)}));
  }
  return tg::concat(rows, 0);
}

namespace detail {

namespace {

void init_block(SepBlock& b, tg::Rng& rng) {
  const Index d = kSepChannels;
  const float conv_std = 1.0f / std::sqrt(static_cast<float>(d * 9));
  const float pw_std = 1.0f / std::sqrt(static_cast<float>(d));
  b.conv_w = Tensor::randn({d, d, 3, 3}, rng, conv_std, true);
  b.conv_b = Tensor::zeros({d}, true);
  b.gru = tg::GruWeights::init(d, d, rng);
  b.pw_w = Tensor::randn({d, d, 1, 1}, rng, pw_std, true);
  b.pw_b = Tensor::zeros({d}, true);
}

}  // namespace

void SepCore::init(Index channels, tg::Rng& rng) {
  channels_in = channels;
  const Index d = kSepChannels;
  const tg::StftConfig stft_cfg;
  const Index bins = stft_cfg.bins();
  proj_w = Tensor::randn({kSepFreq, bins}, rng, 1.0f / std::sqrt(static_cast<float>(bins)), true);
  proj_b = Tensor::zeros({kSepFreq}, true);
  in_w = Tensor::randn({d, channels, 1, 1}, rng, 1.0f / std::sqrt(static_cast<float>(channels)),
                       true);
  in_b = Tensor::zeros({d}, true);
  blocks.resize(static_cast<std::size_t>(kSepBlocks));
  for (auto& b : blocks) init_block(b, rng);
  dec1_w = Tensor::randn({8, d, 1, 1}, rng, 1.0f / std::sqrt(static_cast<float>(d)), true);
  dec1_b = Tensor::zeros({8}, true);
  dec2_w = Tensor::randn({1, 8, 1, 1}, rng, 1.0f / std::sqrt(8.0f), true);
  dec2_b = Tensor::zeros({1}, true);
  mask_w =
      Tensor::randn({bins, kSepFreq}, rng, 1.0f / std::sqrt(static_cast<float>(kSepFreq)), true);
  mask_b = Tensor::zeros({bins}, true);
}

void SepCore::collect(ParamRegistry& reg) const {
  reg.add("proj.w", proj_w);
  reg.add("proj.b", proj_b);
  reg.add("in.w", in_w);
  reg.add("in.b", in_b);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const std::string p = "block" + std::to_string(k) + ".";
    reg.add(p + "conv.w", blocks[k].conv_w);
    reg.add(p + "conv.b", blocks[k].conv_b);
    reg.add(p + "gru.wi", blocks[k].gru.w_input);
    reg.add(p + "gru.wh", blocks[k].gru.w_hidden);
    reg.add(p + "gru.bi", blocks[k].gru.b_input);
    reg.add(p + "gru.bh", blocks[k].gru.b_hidden);
    reg.add(p + "pw.w", blocks[k].pw_w);
    reg.add(p + "pw.b", blocks[k].pw_b);
  }
  reg.add("dec.c1.w", dec1_w);
  reg.add("dec.c1.b", dec1_b);
  reg.add("dec.c2.w", dec2_w);
  reg.add("dec.c2.b", dec2_b);
  reg.add("dec.mask.w", mask_w);
  reg.add("dec.mask.b", mask_b);
}

Tensor SepCore::trunk(const Tensor& spec_in, const std::vector<FilmParams>* film) const {
  if (spec_in.dim(0) != channels_in)
    tg::fail("separator", "expected " + std::to_string(channels_in) + " spectrogram rows, got " +
                              std::to_string(spec_in.dim(0)));
  if (film && static_cast<Index>(film->size()) != kSepBlocks)
    tg::fail("separator", "need one FilmParams per block");

  // learned frequency reduction: per (row, frame) linear over the bin axis
  Tensor x = tg::permute(spec_in, {0, 2, 1});            // [2C, T, bins]
  x = tg::linear(x, proj_w, proj_b);                     // [2C, T, 65]
  x = tg::permute(x, {0, 2, 1});                         // [2C, 65, T]
  x = tg::conv2d(x, in_w, in_b);                         // [D, 65, T]

  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const SepBlock& b = blocks[k];
    Tensor h = tg::relu(tg::conv2d(x, b.conv_w, b.conv_b, {1, 1}, {1, 1}));
    if (film) h = residual_film(h, (*film)[k]);
    Tensor seq = tg::permute(h, {2, 1, 0});              // [T, 65, D]
    seq = tg::gru(seq, b.gru);                           // [T, 65, D]
    h = tg::permute(seq, {2, 1, 0});                     // [D, 65, T]
    h = tg::conv2d(h, b.pw_w, b.pw_b);
    x = tg::add(x, h);
  }
  return x;
}

Tensor SepCore::decode(const Tensor& object, const Tensor& mix_re, const Tensor& mix_im,
                       const tg::StftConfig& cfg) const {
  Tensor m = tg::relu(tg::conv2d(object, dec1_w, dec1_b));  // [8, 65, T]
  m = tg::conv2d(m, dec2_w, dec2_b);                        // [1, 65, T]
  m = tg::reshape(m, {object.dim(1), object.dim(2)});       // [65, T]
  m = tg::permute(m, {1, 0});                               // [T, 65]
  m = tg::linear(m, mask_w, mask_b);                        // [T, 257]
  m = tg::sigmoid(tg::permute(m, {1, 0}));                  // [257, T]
  Tensor est_re = tg::mul(m, mix_re);
  Tensor est_im = tg::mul(m, mix_im);
  return tg::istft_op(est_re, est_im, cfg);
}

}  // namespace detail

UssModel::UssModel(std::uint64_t seed) {
  tg::Rng rng(seed, 0);
  core_.init(2 * kMixChannels, rng);
  const float std = 1.0f / std::sqrt(static_cast<float>(kSepChannels));
  for (Index s = 0; s < kSlots; ++s) {
    slot_w_[static_cast<std::size_t>(s)] =
        Tensor::randn({kSepChannels, kSepChannels, 1, 1}, rng, std, true);
    slot_b_[static_cast<std::size_t>(s)] = Tensor::zeros({kSepChannels}, true);
  }
}

SeparatorOutput UssModel::forward(const AudioBuffer& mix) const {
  if (mix.channels != kMixChannels)
    tg::fail("uss_forward", "expected " + std::to_string(kMixChannels) + " channels, got " +
                                std::to_string(mix.channels));
  std::vector<std::vector<float>> chans;
  for (Index c = 0; c < mix.channels; ++c) chans.push_back(mix.channel_vec(c));
  Tensor spec_in = stft_frontend(chans, stft_cfg);
  Tensor y = core_.trunk(spec_in, nullptr);
  auto [mix_re, mix_im] = tg::stft_tensors(chans[0], stft_cfg);

  SeparatorOutput out;
  for (Index s = 0; s < kSlots; ++s) {
    Tensor obj = tg::conv2d(y, slot_w_[static_cast<std::size_t>(s)],
                            slot_b_[static_cast<std::size_t>(s)]);
    out.waveforms.push_back(core_.decode(obj, mix_re, mix_im, stft_cfg));
    out.objects.push_back(std::move(obj));
  }
  return out;
}

ParamRegistry UssModel::params() const {
  ParamRegistry reg;
  core_.collect(reg);
  for (Index s = 0; s < kSlots; ++s) {
    reg.add("slot" + std::to_string(s) + ".w", slot_w_[static_cast<std::size_t>(s)]);
    reg.add("slot" + std::to_string(s) + ".b", slot_b_[static_cast<std::size_t>(s)]);
  }
  return reg;
}

std::map<std::string, std::string> UssModel::meta() const {
  return {{"model", "uss"},
          {"d", std::to_string(kSepChannels)},
          {"f", std::to_string(kSepFreq)},
          {"blocks", std::to_string(kSepBlocks)},
          {"channels_in", std::to_string(core_.channels_in)},
          {"window", std::to_string(stft_cfg.window)},
          {"hop", std::to_string(stft_cfg.hop)}};
}

void UssModel::check_meta(const std::map<std::string, std::string>& m) const {
  check_meta_matches(meta(), m);
}

TseModel::TseModel(std::uint64_t seed) {
  tg::Rng rng(seed, 0);
  // 4 mixture channels + own enrollment + mean of the other enrollments
  core_.init(2 * (kMixChannels + 2), rng);
  feat_w_ = Tensor::randn({kSepChannels, kSepChannels, 1, 1}, rng,
                          1.0f / std::sqrt(static_cast<float>(kSepChannels)), true);
  feat_b_ = Tensor::zeros({kSepChannels}, true);
}

SeparatorOutput TseModel::forward(const AudioBuffer& mix,
                                  const std::array<std::vector<float>, kSlots>& enrollments,
                                  const std::vector<FilmParams>* film) const {
  if (mix.channels != kMixChannels) tg::fail("tse_forward", "expected 4-channel mixture");
  const std::size_t n = static_cast<std::size_t>(mix.samples);
  for (const auto& e : enrollments)
    if (e.size() != n)
      tg::fail("tse_forward", "enrollment length " + std::to_string(e.size()) +
                                  " does not match mixture length " + std::to_string(n));

  std::vector<std::vector<float>> mix_chans;
  for (Index c = 0; c < mix.channels; ++c) mix_chans.push_back(mix.channel_vec(c));
  auto [mix_re, mix_im] = tg::stft_tensors(mix_chans[0], stft_cfg);

  SeparatorOutput out;
  for (Index s = 0; s < kSlots; ++s) {
    std::vector<float> others(n, 0.0f);
    for (Index o = 0; o < kSlots; ++o) {
      if (o == s) continue;
      const auto& e = enrollments[static_cast<std::size_t>(o)];
      for (std::size_t i = 0; i < n; ++i) others[i] += 0.5f * e[i];
    }
    std::vector<std::vector<float>> chans = mix_chans;
    chans.push_back(enrollments[static_cast<std::size_t>(s)]);
    chans.push_back(std::move(others));
    Tensor spec_in = stft_frontend(chans, stft_cfg);
    Tensor y = core_.trunk(spec_in, film);
    Tensor obj = tg::conv2d(y, feat_w_, feat_b_);
    out.waveforms.push_back(core_.decode(obj, mix_re, mix_im, stft_cfg));
    out.objects.push_back(std::move(obj));
  }
  return out;
}

ParamRegistry TseModel::params() const {
  ParamRegistry reg;
  core_.collect(reg);
  reg.add("feat.w", feat_w_);
  reg.add("feat.b", feat_b_);
  return reg;
}

std::map<std::string, std::string> TseModel::meta() const {
  return {{"model", "tse"},
          {"d", std::to_string(kSepChannels)},
          {"f", std::to_string(kSepFreq)},
          {"blocks", std::to_string(kSepBlocks)},
          {"channels_in", std::to_string(core_.channels_in)},
          {"window", std::to_string(stft_cfg.window)},
          {"hop", std::to_string(stft_cfg.hop)}};
}

void TseModel::check_meta(const std::map<std::string, std::string>& m) const {
  check_meta_matches(meta(), m);
}

}  // namespace scenesep
