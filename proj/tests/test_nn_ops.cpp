// tests/test_nn_ops.cpp

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

// conv2d / linear / pool2d / bilinear / GRU / ASP against naive loop oracles,
// plus 64-bit gradient checks for each.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "scenesep/gradcheck.hpp"
#include "scenesep/nn_ops.hpp"

namespace tg = scenesep::tg;
using tg::Index;
using tg::Tensor64;

namespace {

// Direct 6-nested-loop convolution oracle.
std::vector<double> conv_oracle(const Tensor64& x, const Tensor64& k, const Tensor64& b,
                                Index sh, Index sw, Index ph, Index pw) {
  const Index C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const Index Cout = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const Index OH = (H + 2 * ph - kh) / sh + 1, OW = (W + 2 * pw - kw) / sw + 1;
  std::vector<double> out(static_cast<std::size_t>(Cout * OH * OW), 0.0);
  for (Index co = 0; co < Cout; ++co)
    for (Index oi = 0; oi < OH; ++oi)
      for (Index oj = 0; oj < OW; ++oj) {
        double acc = b.data()[co];
        for (Index ci = 0; ci < C; ++ci)
          for (Index u = 0; u < kh; ++u)
            for (Index v = 0; v < kw; ++v) {
              const Index ii = oi * sh + u - ph, jj = oj * sw + v - pw;
              if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
              acc += x.data()[(ci * H + ii) * W + jj] *
                     k.data()[((co * k.dim(1) + ci) * kh + u) * kw + v];
            }
        out[static_cast<std::size_t>((co * OH + oi) * OW + oj)] = acc;
      }
  return out;
}

double sigmoid_d(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

TEST_CASE("conv2d: ones kernel sums a 3x3 patch to 9") {
  auto x = Tensor64::filled({1, 3, 3}, 1.0);
  auto k = Tensor64::filled({1, 1, 3, 3}, 1.0);
  auto b = Tensor64::zeros({1});
  auto y = tg::conv2d(x, k, b);
  CHECK(y.shape() == tg::Shape{1, 1, 1});
  CHECK(y.item() == doctest::Approx(9.0));
}

TEST_CASE("conv2d: 1x1 unit kernel is the identity") {
  tg::Rng rng(11, 0);
  auto x = Tensor64::randn({1, 4, 4}, rng);
  auto k = Tensor64::filled({1, 1, 1, 1}, 1.0);
  auto b = Tensor64::zeros({1});
  auto y = tg::conv2d(x, k, b);
  for (Index i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == doctest::Approx(x.data()[i]));
}

TEST_CASE("conv2d matches the loop oracle on random instances") {
  struct Case {
    Index sh, sw, ph, pw;
  };
  const Case cases[] = {{1, 1, 0, 0}, {1, 1, 1, 1}, {2, 1, 1, 0}, {2, 2, 0, 1}};
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    tg::Rng rng(seed, 2);
    auto x = Tensor64::randn({2, 5, 5}, rng);
    auto k = Tensor64::randn({3, 2, 3, 3}, rng);
    auto b = Tensor64::randn({3}, rng);
    const Case c = cases[seed];
    auto y = tg::conv2d(x, k, b, {c.sh, c.sw}, {c.ph, c.pw});
    const std::vector<double> want = conv_oracle(x, k, b, c.sh, c.sw, c.ph, c.pw);
    REQUIRE(static_cast<std::size_t>(y.numel()) == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(y.data()[static_cast<Index>(i)] == doctest::Approx(want[i]).epsilon(1e-6));
  }

  auto x = Tensor64::zeros({2, 3, 3});
  auto k = Tensor64::zeros({1, 3, 2, 2});  // C_in mismatch
  CHECK_THROWS_AS(tg::conv2d(x, k, Tensor64::zeros({1})), std::invalid_argument);
}

TEST_CASE("conv2d gradcheck on 10 random instances") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    tg::Rng rng(seed, 3);
    auto x = Tensor64::randn({2, 4, 4}, rng, 1.0, true);
    auto k = Tensor64::randn({2, 2, 2, 2}, rng, 1.0, true);
    auto b = Tensor64::randn({2}, rng, 1.0, true);
    const Index sh = (seed % 2) + 1, pw = seed % 2;
    auto res = tg::gradcheck(
        [&] { return tg::sum(tg::conv2d(x, k, b, {sh, 1}, {1, pw})); }, {x, k, b});
    INFO("seed ", seed, " rel ", res.max_rel_error);
    CHECK(res.max_rel_error <= 1e-6);
  }
}

TEST_CASE("linear: identity, hand arithmetic, and loop oracle") {
  auto w_id = Tensor64::from_data({2, 2}, {1, 0, 0, 1});
  auto x = Tensor64::from_data({2}, {3, 4});
  auto y = tg::linear(x, w_id, Tensor64::zeros({2}));
  CHECK(y.data()[0] == 3.0);
  CHECK(y.data()[1] == 4.0);

  auto w = Tensor64::from_data({1, 2}, {1, 1});
  auto b = Tensor64::from_data({1}, {1});
  auto y2 = tg::linear(Tensor64::from_data({2}, {2, 3}), w, b);
  CHECK(y2.shape() == tg::Shape{1});
  CHECK(y2.item() == 6.0);

  tg::Rng rng(5, 0);
  auto xb = Tensor64::randn({4, 7}, rng);
  auto wr = Tensor64::randn({5, 7}, rng);
  auto br = Tensor64::randn({5}, rng);
  auto yr = tg::linear(xb, wr, br);
  REQUIRE(yr.shape() == tg::Shape{4, 5});
  for (Index i = 0; i < 4; ++i)
    for (Index m = 0; m < 5; ++m) {
      double acc = br.data()[m];
      for (Index n = 0; n < 7; ++n) acc += xb.data()[i * 7 + n] * wr.data()[m * 7 + n];
      CHECK(yr.data()[i * 5 + m] == doctest::Approx(acc).epsilon(1e-6));
    }

  // Trailing-axis map on a rank-3 batch.
  auto x3 = Tensor64::randn({2, 3, 7}, rng);
  auto y3 = tg::linear(x3, wr, br);
  CHECK(y3.shape() == tg::Shape{2, 3, 5});
  auto flat = tg::linear(tg::reshape(x3, {6, 7}), wr, br);
  for (Index i = 0; i < 30; ++i) CHECK(y3.data()[i] == doctest::Approx(flat.data()[i]));

  CHECK_THROWS_AS(tg::linear(xb, Tensor64::zeros({5, 6}), br), std::invalid_argument);
}

TEST_CASE("matmul matches the loop oracle") {
  tg::Rng rng(6, 0);
  auto a = Tensor64::randn({2, 3}, rng);
  auto b = Tensor64::randn({3, 4}, rng);
  auto y = tg::matmul(a, b);
  REQUIRE(y.shape() == tg::Shape{2, 4});
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (Index k = 0; k < 3; ++k) acc += a.data()[i * 3 + k] * b.data()[k * 4 + j];
      CHECK(y.data()[i * 4 + j] == doctest::Approx(acc).epsilon(1e-9));
    }
}

TEST_CASE("linear and matmul gradcheck on 10 random instances") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    tg::Rng rng(seed, 4);
    auto x = Tensor64::randn({2, 3, 4}, rng, 1.0, true);
    auto w = Tensor64::randn({5, 4}, rng, 1.0, true);
    auto b = Tensor64::randn({5}, rng, 1.0, true);
    auto a = Tensor64::randn({3, 2}, rng, 1.0, true);
    auto c = Tensor64::randn({2, 3}, rng, 1.0, true);
    auto res = tg::gradcheck(
        [&] {
          return tg::add(tg::sum(tg::linear(x, w, b)), tg::sum(tg::matmul(a, c)));
        },
        {x, w, b, a, c});
    CHECK(res.max_rel_error <= 1e-6);
  }
}

TEST_CASE("pool2d: constants, max oracle, loop oracle") {
  auto c = Tensor64::filled({2, 4, 4}, 3.25);
  auto avg = tg::pool2d(c, tg::PoolKind::kAvg, {4, 4}, {1, 1});
  CHECK(avg.shape() == tg::Shape{2, 1, 1});
  CHECK(avg.data()[0] == doctest::Approx(3.25));

  auto m = tg::pool2d(Tensor64::from_data({1, 2, 2}, {1, 2, 3, 4}), tg::PoolKind::kMax, {2, 2},
                      {1, 1});
  CHECK(m.item() == 4.0);

  tg::Rng rng(9, 0);
  auto x = Tensor64::randn({2, 6, 5}, rng);
  for (tg::PoolKind kind : {tg::PoolKind::kAvg, tg::PoolKind::kMax}) {
    auto y = tg::pool2d(x, kind, {2, 2}, {2, 1});
    const Index OH = (6 - 2) / 2 + 1, OW = (5 - 2) / 1 + 1;
    REQUIRE(y.shape() == tg::Shape{2, OH, OW});
    for (Index ch = 0; ch < 2; ++ch)
      for (Index oi = 0; oi < OH; ++oi)
        for (Index oj = 0; oj < OW; ++oj) {
          double acc = kind == tg::PoolKind::kAvg ? 0.0 : -1e300;
          for (Index u = 0; u < 2; ++u)
            for (Index v = 0; v < 2; ++v) {
              const double val = x.data()[(ch * 6 + oi * 2 + u) * 5 + oj * 1 + v];
              if (kind == tg::PoolKind::kAvg)
                acc += val / 4.0;
              else
                acc = std::max(acc, val);
            }
          CHECK(y.data()[(ch * OH + oi) * OW + oj] == doctest::Approx(acc).epsilon(1e-9));
        }
  }

  CHECK_THROWS_AS(tg::pool2d(x, tg::PoolKind::kAvg, {0, 2}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(tg::pool2d(x, tg::PoolKind::kAvg, {7, 2}, {1, 1}), std::invalid_argument);
}

TEST_CASE("max-pool ties route gradient to the lowest flat index") {
  auto x = Tensor64::filled({1, 2, 2}, 1.0, true);
  auto y = tg::pool2d(x, tg::PoolKind::kMax, {2, 2}, {1, 1});
  y.backward(true);
  CHECK(x.impl()->grad[0] == 1.0);
  CHECK(x.impl()->grad[1] == 0.0);
  CHECK(x.impl()->grad[2] == 0.0);
  CHECK(x.impl()->grad[3] == 0.0);
}

TEST_CASE("pool2d gradcheck on 10 random instances") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    tg::Rng rng(seed, 5);
    auto a = Tensor64::randn({2, 3, 4}, rng, 1.0, true);
    // Distinct, well-separated values keep the max argmax stable under +-step.
    std::vector<double> vals(24);
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] = 0.37 * static_cast<double>(i) + rng.uniform(0.0, 0.1);
    for (std::size_t i = 0; i < vals.size(); ++i)
      std::swap(vals[i], vals[static_cast<std::size_t>(rng.uniform_int(0, 23))]);
    auto b = Tensor64::from_data({2, 3, 4}, std::move(vals), true);
    auto res = tg::gradcheck(
        [&] {
          auto pa = tg::pool2d(a, tg::PoolKind::kAvg, {2, 2}, {1, 2});
          auto pm = tg::pool2d(b, tg::PoolKind::kMax, {2, 2}, {1, 1});
          return tg::add(tg::sum(pa), tg::sum(pm));
        },
        {a, b});
    CHECK(res.max_rel_error <= 1e-6);
  }
}

TEST_CASE("bilinear_resample_1d oracles") {
  tg::Rng rng(13, 0);
  auto x = Tensor64::randn({3, 7}, rng);
  auto same = tg::bilinear_resample_1d(x, 7);
  for (Index i = 0; i < x.numel(); ++i) CHECK(same.data()[i] == doctest::Approx(x.data()[i]));

  auto up = tg::bilinear_resample_1d(Tensor64::from_data({1, 2}, {0, 2}), 3);
  CHECK(up.data()[0] == doctest::Approx(0.0));
  CHECK(up.data()[1] == doctest::Approx(1.0));
  CHECK(up.data()[2] == doctest::Approx(2.0));

  // [1,3,2] to length 5: source coords i*(3-1)/(5-1) = 0, .5, 1, 1.5, 2.
  auto mid = tg::bilinear_resample_1d(Tensor64::from_data({1, 3}, {1, 3, 2}), 5);
  const double want[] = {1.0, 2.0, 3.0, 2.5, 2.0};
  for (Index i = 0; i < 5; ++i) CHECK(mid.data()[i] == doctest::Approx(want[i]));

  // Length-1 target maps to source coordinate 0.
  auto one = tg::bilinear_resample_1d(Tensor64::from_data({1, 3}, {4, 5, 6}), 1);
  CHECK(one.item() == doctest::Approx(4.0));

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    tg::Rng grng(seed, 6);
    auto g = Tensor64::randn({2, 5}, grng, 1.0, true);
    auto res = tg::gradcheck(
        [&] {
          return tg::add(tg::sum(tg::bilinear_resample_1d(g, 9)),
                         tg::sum(tg::bilinear_resample_1d(g, 3)));
        },
        {g});
    CHECK(res.max_rel_error <= 1e-6);
  }
}

TEST_CASE("gru: zero weights give zero states") {
  tg::GruWeightsT<double> w;
  w.w_input = Tensor64::zeros({6, 3});
  w.w_hidden = Tensor64::zeros({6, 2});
  w.b_input = Tensor64::zeros({6});
  w.b_hidden = Tensor64::zeros({6});
  tg::Rng rng(1, 0);
  auto x = Tensor64::randn({4, 1, 3}, rng);
  auto y = tg::gru(x, w);
  CHECK(y.shape() == tg::Shape{4, 1, 2});
  for (Index i = 0; i < y.numel(); ++i) CHECK(y.data()[i] == 0.0);
}

TEST_CASE("gru: length-1 bidirectional output concatenates both directions") {
  tg::Rng rng(2, 0);
  auto fwd = tg::GruWeightsT<double>::init(3, 2, rng);
  auto bwd = tg::GruWeightsT<double>::init(3, 2, rng);
  auto x = Tensor64::randn({1, 1, 3}, rng);
  auto both = tg::gru(x, fwd, &bwd);
  auto f = tg::gru(x, fwd);
  auto b = tg::gru(x, bwd);
  REQUIRE(both.shape() == tg::Shape{1, 1, 4});
  for (Index i = 0; i < 2; ++i) {
    CHECK(both.data()[i] == doctest::Approx(f.data()[i]));
    CHECK(both.data()[i + 2] == doctest::Approx(b.data()[i]));
  }
}

TEST_CASE("gru matches a step-by-step scalar recurrence oracle") {
  tg::Rng rng(4, 0);
  auto w = tg::GruWeightsT<double>::init(1, 1, rng);
  // Nonzero biases exercise every term of the recurrence.
  w.b_input = Tensor64::from_data({3}, {0.1, -0.2, 0.3}, true);
  w.b_hidden = Tensor64::from_data({3}, {-0.1, 0.2, -0.3}, true);
  auto x = Tensor64::from_data({4, 1, 1}, {0.5, -1.0, 0.25, 2.0});
  auto y = tg::gru(x, w);

  const double wi_r = w.w_input.data()[0], wi_z = w.w_input.data()[1], wi_n = w.w_input.data()[2];
  const double wh_r = w.w_hidden.data()[0], wh_z = w.w_hidden.data()[1], wh_n = w.w_hidden.data()[2];
  double h = 0.0;
  for (Index t = 0; t < 4; ++t) {
    const double xt = x.data()[t];
    const double r = sigmoid_d(wi_r * xt + 0.1 + wh_r * h - 0.1);
    const double z = sigmoid_d(wi_z * xt - 0.2 + wh_z * h + 0.2);
    const double n = std::tanh(wi_n * xt + 0.3 + r * (wh_n * h - 0.3));
    h = (1.0 - z) * n + z * h;
    CHECK(y.data()[t] == doctest::Approx(h).epsilon(1e-6));
  }
}

TEST_CASE("gru gradcheck") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    tg::Rng rng(seed, 7);
    auto fwd = tg::GruWeightsT<double>::init(2, 2, rng);
    auto bwd = tg::GruWeightsT<double>::init(2, 2, rng);
    auto x = Tensor64::randn({3, 1, 2}, rng, 1.0, true);
    auto res = tg::gradcheck(
        [&] { return tg::sum(tg::gru(x, fwd, &bwd)); },
        {x, fwd.w_input, fwd.w_hidden, fwd.b_input, fwd.b_hidden, bwd.w_input, bwd.w_hidden,
         bwd.b_input, bwd.b_hidden});
    CHECK(res.max_rel_error <= 1e-6);
  }
}

TEST_CASE("asp: constant sequence pools to [c, ~0]") {
  tg::Rng rng(8, 0);
  auto p = tg::AspParamsT<double>::init(2, 3, rng);
  auto h = Tensor64::filled({3, 2}, 2.0);
  auto y = tg::asp(h, p);
  REQUIRE(y.shape() == tg::Shape{4});
  CHECK(y.data()[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(y.data()[1] == doctest::Approx(2.0).epsilon(1e-9));
  // Variance floor 1e-8 puts the zero-variance std at 1e-4.
  CHECK(y.data()[2] <= 1e-3);
  CHECK(y.data()[3] <= 1e-3);
}

TEST_CASE("asp: uniform attention statistics oracle") {
  tg::AspParamsT<double> p;
  p.w_hidden = Tensor64::zeros({3, 1});
  p.b_hidden = Tensor64::zeros({3});
  p.w_score = Tensor64::zeros({1, 3});
  p.b_score = Tensor64::zeros({1});
  auto h = Tensor64::from_data({2, 1}, {0.0, 2.0});
  auto y = tg::asp(h, p);
  CHECK(y.data()[0] == doctest::Approx(1.0));  // mean of {0,2}
  CHECK(y.data()[1] == doctest::Approx(1.0));  // std of {0,2}
}

TEST_CASE("asp weights are a probability vector") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    tg::Rng rng(seed, 8);
    auto p = tg::AspParamsT<double>::init(3, 4, rng);
    auto h = Tensor64::randn({6, 3}, rng);
    auto w = tg::asp_weights(h, p);
    double total = 0.0;
    for (Index i = 0; i < w.numel(); ++i) {
      CHECK(w.data()[i] >= 0.0);
      total += w.data()[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("asp-then-sum gradcheck") {
  tg::Rng rng(14, 0);
  auto p = tg::AspParamsT<double>::init(3, 4, rng);
  auto h = Tensor64::randn({3, 3}, rng, 1.0, true);
  auto res = tg::gradcheck([&] { return tg::sum(tg::asp(h, p)); },
                           {h, p.w_hidden, p.b_hidden, p.w_score, p.b_score});
  CHECK(res.max_rel_error <= 1e-5);
}
