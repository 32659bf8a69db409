// scenesep/nn_ops.hpp

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

#ifndef SCENESEP_NN_OPS_HPP_
#define SCENESEP_NN_OPS_HPP_

#include <utility>

#include "scenesep/tensor.hpp"

namespace scenesep {
namespace tg {

// ---------------------------------------------------------------------------
// Register-friendly GEMM kernels (row-major). accumulate=false zero-fills C.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void gemm_nn(Index M, Index N, Index K, const T* A, const T* B, T* C, bool accumulate) {
  if (!accumulate) std::fill(C, C + M * N, T(0));
  for (Index i = 0; i < M; ++i) {
    T* c = C + i * N;
    const T* a = A + i * K;
    for (Index k = 0; k < K; ++k) {
      const T av = a[k];
      const T* b = B + k * N;
      for (Index j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

// C[M,N] (+)= A^T B with A stored [K,M]
template <typename T>
void gemm_tn(Index M, Index N, Index K, const T* A, const T* B, T* C, bool accumulate) {
  if (!accumulate) std::fill(C, C + M * N, T(0));
  for (Index k = 0; k < K; ++k) {
    const T* a = A + k * M;
    const T* b = B + k * N;
    for (Index i = 0; i < M; ++i) {
      const T av = a[i];
      T* c = C + i * N;
      for (Index j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

// C[M,N] (+)= A B^T with B stored [N,K]
template <typename T>
void gemm_nt(Index M, Index N, Index K, const T* A, const T* B, T* C, bool accumulate) {
  for (Index i = 0; i < M; ++i) {
    const T* a = A + i * K;
    T* c = C + i * N;
    for (Index j = 0; j < N; ++j) {
      const T* b = B + j * K;
      T acc = T(0);
      for (Index k = 0; k < K; ++k) acc += a[k] * b[k];
      if (accumulate)
        c[j] += acc;
      else
        c[j] = acc;
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// matmul / linear
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) fail("matmul", "expected rank-2 operands");
  if (a.dim(1) != b.dim(0))
    fail("matmul", "inner extents " + std::to_string(a.dim(1)) + " vs " + std::to_string(b.dim(0)));
  const Index M = a.dim(0), K = a.dim(1), N = b.dim(1);
  auto ia = a.impl(), ib = b.impl();
  auto out = detail::make_node<T>({M, N}, {ia, ib});
  detail::gemm_nn(M, N, K, ia->data.data(), ib->data.data(), out->data.data(), false);
  if (out->requires_grad) {
    out->backward_fn = [ia, ib, M, N, K](TensorImplT<T>& self) {
      if (ia->requires_grad) {
        ia->ensure_grad();
        detail::gemm_nt(M, K, N, self.grad.data(), ib->data.data(), ia->grad.data(), true);
      }
      if (ib->requires_grad) {
        ib->ensure_grad();
        detail::gemm_tn(K, N, M, ia->data.data(), self.grad.data(), ib->grad.data(), true);
      }
    };
  }
  return TensorT<T>(out);
}

/// Affine map over the trailing axis: x[..., n] -> y[..., m] with weight[m, n].
template <typename T>
TensorT<T> linear(const TensorT<T>& x, const TensorT<T>& weight, const TensorT<T>& bias) {
  if (weight.rank() != 2) fail("linear", "weight must be rank-2");
  const Index n = weight.dim(1), m = weight.dim(0);
  if (x.shape().back() != n)
    fail("linear", "trailing extent " + std::to_string(x.shape().back()) +
                       " does not match weight columns " + std::to_string(n));
  if (bias.rank() != 1 || bias.dim(0) != m) fail("linear", "bias extent mismatch");
  Shape os = x.shape();
  os.back() = m;
  const Index rows = x.numel() / n;
  auto ix = x.impl(), iw = weight.impl(), ibias = bias.impl();
  auto out = detail::make_node<T>(os, {ix, iw, ibias});
  detail::gemm_nt(rows, m, n, ix->data.data(), iw->data.data(), out->data.data(), false);
  for (Index r = 0; r < rows; ++r) {
    T* y = out->data.data() + r * m;
    for (Index j = 0; j < m; ++j) y[j] += ibias->data[j];
  }
  if (out->requires_grad) {
    out->backward_fn = [ix, iw, ibias, rows, m, n](TensorImplT<T>& self) {
      if (ix->requires_grad) {
        ix->ensure_grad();
        detail::gemm_nn(rows, n, m, self.grad.data(), iw->data.data(), ix->grad.data(), true);
      }
      if (iw->requires_grad) {
        iw->ensure_grad();
        detail::gemm_tn(m, n, rows, self.grad.data(), ix->data.data(), iw->grad.data(), true);
      }
      if (ibias->requires_grad) {
        ibias->ensure_grad();
        for (Index r = 0; r < rows; ++r) {
          const T* g = self.grad.data() + r * m;
          for (Index j = 0; j < m; ++j) ibias->grad[j] += g[j];
        }
      }
    };
  }
  return TensorT<T>(out);
}

// ---------------------------------------------------------------------------
// conv2d (im2col + GEMM)
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void im2col(const T* x, Index C, Index H, Index W, Index kh, Index kw, Index sh, Index sw,
            Index ph, Index pw, Index OH, Index OW, T* col) {
  // col layout: [C*kh*kw, OH*OW]
  const Index L = OH * OW;
  for (Index c = 0; c < C; ++c) {
    const T* xc = x + c * H * W;
    for (Index ki = 0; ki < kh; ++ki) {
      for (Index kj = 0; kj < kw; ++kj) {
        T* row = col + ((c * kh + ki) * kw + kj) * L;
        for (Index oi = 0; oi < OH; ++oi) {
          const Index ii = oi * sh + ki - ph;
          T* dst = row + oi * OW;
          if (ii < 0 || ii >= H) {
            std::fill(dst, dst + OW, T(0));
            continue;
          }
          const T* src = xc + ii * W;
          for (Index oj = 0; oj < OW; ++oj) {
            const Index jj = oj * sw + kj - pw;
            dst[oj] = (jj >= 0 && jj < W) ? src[jj] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, Index C, Index H, Index W, Index kh, Index kw, Index sh, Index sw,
                Index ph, Index pw, Index OH, Index OW, T* x) {
  const Index L = OH * OW;
  for (Index c = 0; c < C; ++c) {
    T* xc = x + c * H * W;
    for (Index ki = 0; ki < kh; ++ki) {
      for (Index kj = 0; kj < kw; ++kj) {
        const T* row = col + ((c * kh + ki) * kw + kj) * L;
        for (Index oi = 0; oi < OH; ++oi) {
          const Index ii = oi * sh + ki - ph;
          if (ii < 0 || ii >= H) continue;
          T* dst = xc + ii * W;
          const T* src = row + oi * OW;
          for (Index oj = 0; oj < OW; ++oj) {
            const Index jj = oj * sw + kj - pw;
            if (jj >= 0 && jj < W) dst[jj] += src[oj];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 2-D convolution, x[C_in,H,W] * kernels[C_out,C_in,kh,kw] + bias[C_out].
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& kernels, const TensorT<T>& bias,
                  std::pair<Index, Index> stride = {1, 1}, std::pair<Index, Index> padding = {0, 0}) {
  if (x.rank() != 3) fail("conv2d", "input must be [C,H,W], got " + shape_str(x.shape()));
  if (kernels.rank() != 4) fail("conv2d", "kernels must be [Cout,Cin,kh,kw]");
  const Index C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const Index Cout = kernels.dim(0), Cin = kernels.dim(1), kh = kernels.dim(2), kw = kernels.dim(3);
  const auto [sh, sw] = stride;
  const auto [ph, pw] = padding;
  if (Cin != C)
    fail("conv2d", "input channels " + std::to_string(C) + " != kernel channels " + std::to_string(Cin));
  if (sh <= 0 || sw <= 0) fail("conv2d", "non-positive stride");
  if (kh > H + 2 * ph) fail("conv2d", "kernel height " + std::to_string(kh) +
                                          " exceeds padded input height " + std::to_string(H + 2 * ph));
  if (kw > W + 2 * pw) fail("conv2d", "kernel width " + std::to_string(kw) +
                                          " exceeds padded input width " + std::to_string(W + 2 * pw));
  if (bias.rank() != 1 || bias.dim(0) != Cout) fail("conv2d", "bias extent mismatch");

  const Index OH = (H + 2 * ph - kh) / sh + 1;
  const Index OW = (W + 2 * pw - kw) / sw + 1;
  const Index K = C * kh * kw, L = OH * OW;

  auto ix = x.impl(), iw = kernels.impl(), ibias = bias.impl();
  auto out = detail::make_node<T>({Cout, OH, OW}, {ix, iw, ibias});

  std::vector<T> col(static_cast<std::size_t>(K * L));
  detail::im2col(ix->data.data(), C, H, W, kh, kw, sh, sw, ph, pw, OH, OW, col.data());
  detail::gemm_nn(Cout, L, K, iw->data.data(), col.data(), out->data.data(), false);
  for (Index co = 0; co < Cout; ++co) {
    T* y = out->data.data() + co * L;
    const T b = ibias->data[co];
    for (Index i = 0; i < L; ++i) y[i] += b;
  }

  if (out->requires_grad) {
    // col is recomputed in backward to keep graphs lean
    out->backward_fn = [ix, iw, ibias, C, H, W, kh, kw, sh, sw, ph, pw, OH, OW, Cout, K,
                        L](TensorImplT<T>& self) {
      std::vector<T> colb;
      if (iw->requires_grad) {
        colb.resize(static_cast<std::size_t>(K * L));
        detail::im2col(ix->data.data(), C, H, W, kh, kw, sh, sw, ph, pw, OH, OW, colb.data());
        iw->ensure_grad();
        detail::gemm_nt(Cout, K, L, self.grad.data(), colb.data(), iw->grad.data(), true);
      }
      if (ibias->requires_grad) {
        ibias->ensure_grad();
        for (Index co = 0; co < Cout; ++co) {
          const T* g = self.grad.data() + co * L;
          T acc = T(0);
          for (Index i = 0; i < L; ++i) acc += g[i];
          ibias->grad[co] += acc;
        }
      }
      if (ix->requires_grad) {
        ix->ensure_grad();
        std::vector<T> dcol(static_cast<std::size_t>(K * L));
        detail::gemm_tn(K, L, Cout, iw->data.data(), self.grad.data(), dcol.data(), false);
        detail::col2im_add(dcol.data(), C, H, W, kh, kw, sh, sw, ph, pw, OH, OW, ix->grad.data());
      }
    };
  }
  return TensorT<T>(out);
}

// ---------------------------------------------------------------------------
// pool2d
// ---------------------------------------------------------------------------

enum class PoolKind { kAvg, kMax };

template <typename T>
TensorT<T> pool2d(const TensorT<T>& x, PoolKind kind, std::pair<Index, Index> window,
                  std::pair<Index, Index> stride) {
  if (x.rank() != 3) fail("pool2d", "input must be [C,H,W]");
  const Index C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const auto [wh, ww] = window;
  const auto [sh, sw] = stride;
  if (wh <= 0 || ww <= 0) fail("pool2d", "zero-size window");
  if (sh <= 0 || sw <= 0) fail("pool2d", "non-positive stride");
  if (wh > H || ww > W)
    fail("pool2d", "window " + std::to_string(wh) + "x" + std::to_string(ww) +
                       " does not fit input " + std::to_string(H) + "x" + std::to_string(W));
  const Index OH = (H - wh) / sh + 1, OW = (W - ww) / sw + 1;

  auto ix = x.impl();
  auto out = detail::make_node<T>({C, OH, OW}, {ix});
  std::vector<Index> argmax;
  if (kind == PoolKind::kMax) argmax.resize(static_cast<std::size_t>(C * OH * OW));

  const T inv = T(1) / static_cast<T>(wh * ww);
  for (Index c = 0; c < C; ++c) {
    const T* xc = ix->data.data() + c * H * W;
    for (Index oi = 0; oi < OH; ++oi)
      for (Index oj = 0; oj < OW; ++oj) {
        const Index o = (c * OH + oi) * OW + oj;
        if (kind == PoolKind::kAvg) {
          T acc = T(0);
          for (Index ki = 0; ki < wh; ++ki)
            for (Index kj = 0; kj < ww; ++kj) acc += xc[(oi * sh + ki) * W + oj * sw + kj];
          out->data[o] = acc * inv;
        } else {
          Index best = (oi * sh) * W + oj * sw;
          T bv = xc[best];
          for (Index ki = 0; ki < wh; ++ki)
            for (Index kj = 0; kj < ww; ++kj) {
              const Index idx = (oi * sh + ki) * W + oj * sw + kj;
              if (xc[idx] > bv) {  // ties keep the lowest flat index
                bv = xc[idx];
                best = idx;
              }
            }
          out->data[o] = bv;
          argmax[o] = c * H * W + best;
        }
      }
  }
  if (out->requires_grad) {
    if (kind == PoolKind::kAvg) {
      out->backward_fn = [ix, C, H, W, wh, ww, sh, sw, OH, OW, inv](TensorImplT<T>& self) {
        ix->ensure_grad();
        for (Index c = 0; c < C; ++c) {
          T* gx = ix->grad.data() + c * H * W;
          for (Index oi = 0; oi < OH; ++oi)
            for (Index oj = 0; oj < OW; ++oj) {
              const T g = self.grad[(c * OH + oi) * OW + oj] * inv;
              for (Index ki = 0; ki < wh; ++ki)
                for (Index kj = 0; kj < ww; ++kj) gx[(oi * sh + ki) * W + oj * sw + kj] += g;
            }
        }
      };
    } else {
      out->backward_fn = [ix, argmax = std::move(argmax)](TensorImplT<T>& self) {
        ix->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) ix->grad[argmax[i]] += self.grad[i];
      };
    }
  }
  return TensorT<T>(out);
}

// ---------------------------------------------------------------------------
// bilinear_resample_1d: per-row linear interpolation with endpoint alignment
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> bilinear_resample_1d(const TensorT<T>& x, Index target_len) {
  if (x.rank() != 2) fail("bilinear_resample_1d", "input must be [G,L]");
  if (target_len < 1) fail("bilinear_resample_1d", "target_len must be >= 1");
  const Index G = x.dim(0), L = x.dim(1), Lp = target_len;
  auto ix = x.impl();
  auto out = detail::make_node<T>({G, Lp}, {ix});

  // sample i maps to source coordinate i*(L-1)/(L'-1); L'=1 maps to source 0
  std::vector<Index> i0(static_cast<std::size_t>(Lp));
  std::vector<T> frac(static_cast<std::size_t>(Lp));
  for (Index i = 0; i < Lp; ++i) {
    double pos = (Lp == 1) ? 0.0
                           : static_cast<double>(i) * static_cast<double>(L - 1) /
                                 static_cast<double>(Lp - 1);
    Index lo = static_cast<Index>(pos);
    if (lo >= L - 1) lo = L > 1 ? L - 2 : 0;
    i0[i] = lo;
    frac[i] = (L == 1) ? T(0) : static_cast<T>(pos - static_cast<double>(lo));
  }
  for (Index g = 0; g < G; ++g) {
    const T* src = ix->data.data() + g * L;
    T* dst = out->data.data() + g * Lp;
    for (Index i = 0; i < Lp; ++i) {
      const Index lo = i0[i];
      const Index hi = (L == 1) ? lo : lo + 1;
      dst[i] = (T(1) - frac[i]) * src[lo] + frac[i] * src[hi];
    }
  }
  if (out->requires_grad) {
    out->backward_fn = [ix, G, L, Lp, i0 = std::move(i0), frac = std::move(frac)](TensorImplT<T>& self) {
      ix->ensure_grad();
      for (Index g = 0; g < G; ++g) {
        T* gx = ix->grad.data() + g * L;
        const T* gy = self.grad.data() + g * Lp;
        for (Index i = 0; i < Lp; ++i) {
          const Index lo = i0[i];
          const Index hi = (L == 1) ? lo : lo + 1;
          gx[lo] += (T(1) - frac[i]) * gy[i];
          gx[hi] += frac[i] * gy[i];
        }
      }
    };
  }
  return TensorT<T>(out);
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

template <typename T>
struct GruWeightsT {
  // gate order: reset, update, candidate
  TensorT<T> w_input;   // [3H, d_in]
  TensorT<T> w_hidden;  // [3H, H]
  TensorT<T> b_input;   // [3H]
  TensorT<T> b_hidden;  // [3H]

  Index hidden() const { return w_hidden.dim(1); }

  static GruWeightsT init(Index d_in, Index hidden, Rng& rng) {
    const T s_in = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d_in)));
    const T s_h = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hidden)));
    GruWeightsT w;
    w.w_input = TensorT<T>::randn({3 * hidden, d_in}, rng, s_in, true);
    w.w_hidden = TensorT<T>::randn({3 * hidden, hidden}, rng, s_h, true);
    w.b_input = TensorT<T>::zeros({3 * hidden}, true);
    w.b_hidden = TensorT<T>::zeros({3 * hidden}, true);
    return w;
  }
};

using GruWeights = GruWeightsT<float>;

namespace detail {

template <typename T>
std::vector<TensorT<T>> gru_direction(const std::vector<TensorT<T>>& steps,
                                      const GruWeightsT<T>& w, bool reverse) {
  const Index H = w.hidden();
  const Index B = steps[0].dim(0);
  TensorT<T> h = TensorT<T>::zeros({B, H});
  std::vector<TensorT<T>> out(steps.size());
  const Index n = static_cast<Index>(steps.size());
  for (Index s = 0; s < n; ++s) {
    const Index t = reverse ? n - 1 - s : s;
    TensorT<T> gi = linear(steps[static_cast<std::size_t>(t)], w.w_input, w.b_input);
    TensorT<T> gh = linear(h, w.w_hidden, w.b_hidden);
    TensorT<T> r = sigmoid(add(slice(gi, 1, 0, H), slice(gh, 1, 0, H)));
    TensorT<T> z = sigmoid(add(slice(gi, 1, H, H), slice(gh, 1, H, H)));
    TensorT<T> cand = tanh_op(add(slice(gi, 1, 2 * H, H), mul(r, slice(gh, 1, 2 * H, H))));
    // h = (1-z)*cand + z*h
    h = add(mul(affine(z, T(-1), T(1)), cand), mul(z, h));
    out[static_cast<std::size_t>(t)] = h;
  }
  return out;
}

}  // namespace detail

/// Standard GRU over a [T, B, d_in] tensor; returns [T, B, H] (or [T, B, 2H]
/// with forward/backward states concatenated when a backward cell is given).
template <typename T>
TensorT<T> gru(const TensorT<T>& x, const GruWeightsT<T>& fwd, const GruWeightsT<T>* bwd = nullptr) {
  if (x.rank() != 3) fail("gru", "input must be [T,B,d], got " + shape_str(x.shape()));
  const Index steps = x.dim(0), B = x.dim(1), d = x.dim(2);
  if (steps < 1) fail("gru", "empty sequence");
  if (fwd.w_input.dim(1) != d) fail("gru", "input extent " + std::to_string(d) +
                                               " does not match weights " +
                                               std::to_string(fwd.w_input.dim(1)));
  std::vector<TensorT<T>> frames(static_cast<std::size_t>(steps));
  for (Index t = 0; t < steps; ++t)
    frames[static_cast<std::size_t>(t)] = reshape(slice(x, 0, t, 1), {B, d});

  std::vector<TensorT<T>> f = detail::gru_direction(frames, fwd, false);
  std::vector<TensorT<T>> parts(static_cast<std::size_t>(steps));
  if (bwd) {
    std::vector<TensorT<T>> b = detail::gru_direction(frames, *bwd, true);
    for (Index t = 0; t < steps; ++t) {
      auto cat = concat<T>({f[static_cast<std::size_t>(t)], b[static_cast<std::size_t>(t)]}, 1);
      parts[static_cast<std::size_t>(t)] = reshape(cat, {1, B, cat.dim(1)});
    }
  } else {
    for (Index t = 0; t < steps; ++t)
      parts[static_cast<std::size_t>(t)] =
          reshape(f[static_cast<std::size_t>(t)], {1, B, fwd.hidden()});
  }
  return concat(parts, 0);
}

// ---------------------------------------------------------------------------
// Attentive statistics pooling
// ---------------------------------------------------------------------------

template <typename T>
struct AspParamsT {
  TensorT<T> w_hidden;  // [k, d]
  TensorT<T> b_hidden;  // [k]
  TensorT<T> w_score;   // [1, k]
  TensorT<T> b_score;   // [1]

  static AspParamsT init(Index d, Index k, Rng& rng) {
    AspParamsT p;
    p.w_hidden = TensorT<T>::randn({k, d}, rng, static_cast<T>(1.0 / std::sqrt(double(d))), true);
    p.b_hidden = TensorT<T>::zeros({k}, true);
    p.w_score = TensorT<T>::randn({1, k}, rng, static_cast<T>(1.0 / std::sqrt(double(k))), true);
    p.b_score = TensorT<T>::zeros({1}, true);
    return p;
  }
};

using AspParams = AspParamsT<float>;

/// Attention-weighted mean and standard deviation of a [T, d] sequence,
/// concatenated to [2d]. Scores come from a one-hidden-layer tanh scorer.
template <typename T>
TensorT<T> asp(const TensorT<T>& h, const AspParamsT<T>& p, T var_floor = T(1e-8)) {
  if (h.rank() != 2) fail("asp", "input must be [T,d]");
  const Index steps = h.dim(0), d = h.dim(1);
  if (steps < 1) fail("asp", "empty sequence");
  TensorT<T> scores = reshape(linear(tanh_op(linear(h, p.w_hidden, p.b_hidden)), p.w_score, p.b_score),
                              {steps});
  TensorT<T> w = reshape(softmax_1d(scores), {1, steps});
  TensorT<T> mean = matmul(w, h);                 // [1, d]
  TensorT<T> sq = matmul(w, mul(h, h));           // [1, d]
  TensorT<T> var = sub(sq, mul(mean, mean));
  TensorT<T> stddev = sqrt_op(clamp_min(var, var_floor));
  return reshape(concat<T>({mean, stddev}, 1), {2 * d});
}

/// Attention weights alone, as a probability vector over frames.
template <typename T>
TensorT<T> asp_weights(const TensorT<T>& h, const AspParamsT<T>& p) {
  const Index steps = h.dim(0);
  TensorT<T> scores = reshape(linear(tanh_op(linear(h, p.w_hidden, p.b_hidden)), p.w_score, p.b_score),
                              {steps});
  return softmax_1d(scores);
}

}  // namespace tg
}  // namespace scenesep

#endif  // SCENESEP_NN_OPS_HPP_
