// tests/test_separator.cpp

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

// Separator stack: FiLM identities, STFT frontend, slot structure,
// determinism, enrollment equivariance, and a scaled-down double-precision
// mirror of the trunk+decoder composition for gradient checking.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "scenesep/gradcheck.hpp"
#include "scenesep/separator.hpp"

namespace tg = scenesep::tg;
using scenesep::AudioBuffer;
using scenesep::FilmParams;
using scenesep::SeparatorOutput;
using scenesep::TseModel;
using scenesep::UssModel;
using tg::Index;
using tg::Tensor;
using tg::Tensor64;

namespace {

AudioBuffer random_mix(std::int64_t samples, std::uint64_t seed) {
  tg::Rng rng(seed, 60);
  AudioBuffer mix = AudioBuffer::zeros(scenesep::kMixChannels, samples, 16000);
  for (auto& v : mix.data) v = static_cast<float>(0.1 * rng.normal());
  return mix;
}

std::vector<FilmParams> zero_film() {
  std::vector<FilmParams> film;
  for (Index k = 0; k < scenesep::kSepBlocks; ++k)
    film.push_back({Tensor::zeros({scenesep::kSepChannels}, true),
                    Tensor::zeros({scenesep::kSepChannels}, true)});
  return film;
}

constexpr std::int64_t kShortLen = 512 + 3 * 256;  // four STFT frames

}  // namespace

TEST_CASE("residual_film: exact identity at zero, pure shift at beta2 only") {
  tg::Rng rng(1, 0);
  Tensor x = Tensor::randn({3, 4, 2}, rng);
  FilmParams zero{Tensor::zeros({3}), Tensor::zeros({3})};
  Tensor y = scenesep::residual_film(x, zero);
  for (Index i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);

  FilmParams shift{Tensor::zeros({3}), Tensor::filled({3}, 0.25f)};
  Tensor s = scenesep::residual_film(x, shift);
  for (Index i = 0; i < x.numel(); ++i)
    CHECK(s.data()[i] == doctest::Approx(x.data()[i] + 0.25f));

  // Scaling path: beta1 = 1 doubles the input.
  FilmParams dbl{Tensor::filled({3}, 1.0f), Tensor::zeros({3})};
  Tensor d = scenesep::residual_film(x, dbl);
  for (Index i = 0; i < x.numel(); ++i)
    CHECK(d.data()[i] == doctest::Approx(2.0f * x.data()[i]));
}

TEST_CASE("film modulation gradcheck") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    tg::Rng rng(seed, 61);
    auto x = Tensor64::randn({3, 2, 4}, rng, 1.0, true);
    auto b1 = Tensor64::randn({3}, rng, 0.5, true);
    auto b2 = Tensor64::randn({3}, rng, 0.5, true);
    auto res = tg::gradcheck(
        [&] {
          auto y = tg::add(x, tg::add_channel(tg::mul_channel(x, b1), b2));
          return tg::mean_all(tg::mul(y, y));
        },
        {x, b1, b2});
    CHECK(res.max_rel_error <= 1e-5);
  }
}

TEST_CASE("stft_frontend: shapes, zero input, and guards") {
  std::vector<std::vector<float>> chans(4, std::vector<float>(1024, 0.0f));
  Tensor spec = scenesep::stft_frontend(chans);
  REQUIRE(spec.shape() == tg::Shape{8, 257, 3});
  for (Index i = 0; i < spec.numel(); ++i) CHECK(spec.data()[i] == 0.0f);

  std::vector<std::vector<float>> longer(1, std::vector<float>(16128, 0.0f));
  CHECK(scenesep::stft_frontend(longer).dim(2) == 62);

  CHECK_THROWS_AS(scenesep::stft_frontend({}), std::invalid_argument);
  chans[2].resize(512);
  CHECK_THROWS_AS(scenesep::stft_frontend(chans), std::invalid_argument);
}

TEST_CASE("uss: slot structure, shapes, and seed determinism") {
  UssModel model(5);
  AudioBuffer mix = random_mix(kShortLen, 3);
  SeparatorOutput out = model.forward(mix);
  REQUIRE(out.objects.size() == static_cast<std::size_t>(scenesep::kSlots));
  REQUIRE(out.waveforms.size() == static_cast<std::size_t>(scenesep::kSlots));
  for (const auto& obj : out.objects)
    CHECK(obj.shape() == tg::Shape{scenesep::kSepChannels, scenesep::kSepFreq, 4});
  for (const auto& wav : out.waveforms) {
    CHECK(wav.shape() == tg::Shape{kShortLen});
    for (Index i = 0; i < wav.numel(); ++i) CHECK(std::isfinite(wav.data()[i]));
  }

  // Same seed, fresh instance: bitwise identical forward.
  UssModel again(5);
  SeparatorOutput out2 = again.forward(mix);
  for (std::size_t s = 0; s < out.waveforms.size(); ++s)
    for (Index i = 0; i < out.waveforms[s].numel(); ++i)
      CHECK(out.waveforms[s].data()[i] == out2.waveforms[s].data()[i]);

  // Different seed: different weights, different outputs.
  UssModel other(6);
  auto alt = other.forward(mix);
  bool differs = false;
  for (Index i = 0; i < alt.waveforms[0].numel() && !differs; ++i)
    differs = alt.waveforms[0].data()[i] != out.waveforms[0].data()[i];
  CHECK(differs);

  AudioBuffer stereo = AudioBuffer::zeros(2, kShortLen, 16000);
  CHECK_THROWS_AS(model.forward(stereo), std::invalid_argument);
}

TEST_CASE("uss: params and meta round-trip through an archive") {
  UssModel model(7);
  auto reg = model.params();
  CHECK(reg.items().size() > 30);
  auto meta = model.meta();
  CHECK_NOTHROW(model.check_meta(meta));
  meta["train_config"] = "steps = 3\n";  // provenance keys are tolerated
  CHECK_NOTHROW(model.check_meta(meta));
  meta["d"] = "17";
  CHECK_THROWS_AS(model.check_meta(meta), std::runtime_error);

  scenesep::Archive a = reg.to_archive();
  UssModel clone(8);  // different weights...
  clone.params().load_from(a);  // ...until the archive payload lands
  AudioBuffer mix = random_mix(kShortLen, 9);
  auto x = model.forward(mix);
  auto y = clone.forward(mix);
  for (Index i = 0; i < x.waveforms[0].numel(); ++i)
    CHECK(x.waveforms[0].data()[i] == y.waveforms[0].data()[i]);
}

TEST_CASE("tse: null film and all-zero film produce bitwise-equal output") {
  TseModel model(11);
  AudioBuffer mix = random_mix(kShortLen, 13);
  std::array<std::vector<float>, 3> enr;
  tg::Rng rng(14, 0);
  for (auto& e : enr) {
    e.resize(static_cast<std::size_t>(kShortLen));
    for (auto& v : e) v = static_cast<float>(0.1 * rng.normal());
  }

  SeparatorOutput plain = model.forward(mix, enr, nullptr);
  auto film = zero_film();
  SeparatorOutput conditioned = model.forward(mix, enr, &film);
  for (std::size_t s = 0; s < 3; ++s)
    for (Index i = 0; i < plain.waveforms[s].numel(); ++i)
      CHECK(plain.waveforms[s].data()[i] == conditioned.waveforms[s].data()[i]);

  // Zero enrollments still run and stay finite.
  std::array<std::vector<float>, 3> silent;
  for (auto& e : silent) e.assign(static_cast<std::size_t>(kShortLen), 0.0f);
  SeparatorOutput quiet = model.forward(mix, silent, &film);
  for (const auto& wav : quiet.waveforms)
    for (Index i = 0; i < wav.numel(); ++i) CHECK(std::isfinite(wav.data()[i]));

  // A nonzero shift at any block changes the output.
  film[1].beta2 = Tensor::filled({scenesep::kSepChannels}, 0.1f, true);
  SeparatorOutput moved = model.forward(mix, enr, &film);
  bool differs = false;
  for (Index i = 0; i < moved.waveforms[0].numel() && !differs; ++i)
    differs = moved.waveforms[0].data()[i] != plain.waveforms[0].data()[i];
  CHECK(differs);

  std::array<std::vector<float>, 3> short_enr = enr;
  short_enr[1].resize(100);
  CHECK_THROWS_AS(model.forward(mix, short_enr, nullptr), std::invalid_argument);
  std::vector<FilmParams> few(film.begin(), film.begin() + 2);
  CHECK_THROWS_AS(model.forward(mix, enr, &few), std::invalid_argument);
}

TEST_CASE("tse: permuting enrollments permutes outputs exactly") {
  TseModel model(21);
  AudioBuffer mix = random_mix(kShortLen, 22);
  std::array<std::vector<float>, 3> enr;
  tg::Rng rng(23, 0);
  for (auto& e : enr) {
    e.resize(static_cast<std::size_t>(kShortLen));
    for (auto& v : e) v = static_cast<float>(0.1 * rng.normal());
  }
  SeparatorOutput base = model.forward(mix, enr, nullptr);

  std::array<std::vector<float>, 3> rolled = {enr[2], enr[0], enr[1]};
  SeparatorOutput perm = model.forward(mix, rolled, nullptr);
  const int src_of[3] = {2, 0, 1};  // perm slot s carries base slot src_of[s]
  for (int s = 0; s < 3; ++s) {
    const auto& got = perm.waveforms[static_cast<std::size_t>(s)];
    const auto& want = base.waveforms[static_cast<std::size_t>(src_of[s])];
    for (Index i = 0; i < got.numel(); ++i) REQUIRE(got.data()[i] == want.data()[i]);
  }
}

TEST_CASE("scaled-down trunk+decoder composition passes gradcheck end to end") {
  // Same op graph as SepCore (projection, pointwise input conv, one
  // conv-film-GRU-pointwise residual block, mask decode, inverse STFT) at
  // toy sizes and double precision.
  tg::StftConfig cfg;
  cfg.window = 8;
  cfg.hop = 4;

  tg::Rng rng(31, 0);
  std::vector<double> wave(20);
  for (auto& v : wave) v = 0.5 * rng.normal();
  auto [re, im] = tg::stft_tensors(wave, cfg);  // [5, 4] constants

  auto proj_w = Tensor64::randn({3, 5}, rng, 0.4, true);
  auto proj_b = Tensor64::randn({3}, rng, 0.1, true);
  auto in_w = Tensor64::randn({2, 2, 1, 1}, rng, 0.5, true);
  auto in_b = Tensor64::randn({2}, rng, 0.1, true);
  auto conv_w = Tensor64::randn({2, 2, 3, 3}, rng, 0.2, true);
  auto conv_b = Tensor64::randn({2}, rng, 0.1, true);
  auto b1 = Tensor64::randn({2}, rng, 0.3, true);
  auto b2 = Tensor64::randn({2}, rng, 0.3, true);
  auto gru = tg::GruWeightsT<double>::init(2, 2, rng);
  auto pw_w = Tensor64::randn({2, 2, 1, 1}, rng, 0.5, true);
  auto pw_b = Tensor64::randn({2}, rng, 0.1, true);
  auto dec1_w = Tensor64::randn({2, 2, 1, 1}, rng, 0.5, true);
  auto dec1_b = Tensor64::randn({2}, rng, 0.1, true);
  auto dec2_w = Tensor64::randn({1, 2, 1, 1}, rng, 0.5, true);
  auto dec2_b = Tensor64::randn({1}, rng, 0.1, true);
  auto mask_w = Tensor64::randn({5, 3}, rng, 0.5, true);
  auto mask_b = Tensor64::randn({5}, rng, 0.1, true);
  auto probe = Tensor64::randn({20}, rng);

  auto forward = [&] {
    auto spec_in = tg::concat<double>({tg::reshape(re, {1, 5, 4}), tg::reshape(im, {1, 5, 4})}, 0);
    auto x = tg::permute(spec_in, {0, 2, 1});
    x = tg::linear(x, proj_w, proj_b);
    x = tg::permute(x, {0, 2, 1});  // [2, 3, 4]
    x = tg::conv2d(x, in_w, in_b);

    auto h = tg::relu(tg::conv2d(x, conv_w, conv_b, {1, 1}, {1, 1}));
    h = tg::add(h, tg::add_channel(tg::mul_channel(h, b1), b2));
    auto seq = tg::permute(h, {2, 1, 0});
    seq = tg::gru(seq, gru);
    h = tg::permute(seq, {2, 1, 0});
    h = tg::conv2d(h, pw_w, pw_b);
    x = tg::add(x, h);

    auto m = tg::relu(tg::conv2d(x, dec1_w, dec1_b));
    m = tg::conv2d(m, dec2_w, dec2_b);
    m = tg::reshape(m, {3, 4});
    m = tg::permute(m, {1, 0});
    m = tg::linear(m, mask_w, mask_b);
    m = tg::sigmoid(tg::permute(m, {1, 0}));
    auto est = tg::istft_op(tg::mul(m, re), tg::mul(m, im), cfg);
    return tg::sum(tg::mul(est, probe));
  };

  auto res = tg::gradcheck(forward,
                           {proj_w, proj_b, in_w, in_b, conv_w, conv_b, b1, b2, gru.w_input,
                            gru.w_hidden, gru.b_input, gru.b_hidden, pw_w, pw_b, dec1_w, dec1_b,
                            dec2_w, dec2_b, mask_w, mask_b});
  INFO("worst param ", res.worst_param, " rel ", res.max_rel_error);
  CHECK(res.max_rel_error <= 1e-4);
  CHECK(res.max_rel_error <= 1e-6);  // double precision does much better
}
