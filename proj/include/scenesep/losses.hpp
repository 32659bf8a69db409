// scenesep/losses.hpp

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

#ifndef SCENESEP_LOSSES_HPP_
#define SCENESEP_LOSSES_HPP_

#include "scenesep/tensor.hpp"

namespace scenesep {
namespace tg {

/// -log softmax(logits)[target], computed via a stable log-sum-exp.
template <typename T>
TensorT<T> cross_entropy(const TensorT<T>& logits, Index target) {
  if (logits.rank() != 1) fail("cross_entropy", "logits must be rank-1");
  const Index C = logits.dim(0);
  if (target < 0 || target >= C)
    fail("cross_entropy", "target " + std::to_string(target) + " outside [0," + std::to_string(C) + ")");
  auto ix = logits.impl();
  auto out = detail::make_node<T>(Shape{1}, {ix});
  const T* z = ix->data.data();
  T mx = z[0];
  for (Index i = 1; i < C; ++i) mx = std::max(mx, z[i]);
  T denom = T(0);
  for (Index i = 0; i < C; ++i) denom += std::exp(z[i] - mx);
  const T lse = mx + std::log(denom);
  out->data[0] = lse - z[target];
  if (out->requires_grad) {
    out->backward_fn = [ix, C, target, mx, denom](TensorImplT<T>& self) {
      ix->ensure_grad();
      const T g = self.grad[0];
      for (Index i = 0; i < C; ++i) {
        T p = std::exp(ix->data[i] - mx) / denom;
        ix->grad[i] += g * (p - (i == target ? T(1) : T(0)));
      }
    };
  }
  return TensorT<T>(out);
}

/// KL(uniform || softmax(logits)) = lse(z) - mean(z) - log C. Zero exactly
/// when all logits are equal; gradient is softmax(z) - 1/C.
template <typename T>
TensorT<T> kl_uniform(const TensorT<T>& logits) {
  if (logits.rank() != 1) fail("kl_uniform", "logits must be rank-1");
  const Index C = logits.dim(0);
  if (C < 1) fail("kl_uniform", "empty logits");
  auto ix = logits.impl();
  auto out = detail::make_node<T>(Shape{1}, {ix});
  const T* z = ix->data.data();
  T mx = z[0], s = T(0);
  for (Index i = 1; i < C; ++i) mx = std::max(mx, z[i]);
  T denom = T(0);
  for (Index i = 0; i < C; ++i) {
    denom += std::exp(z[i] - mx);
    s += z[i];
  }
  out->data[0] = mx + std::log(denom) - s / static_cast<T>(C) - std::log(static_cast<T>(C));
  if (out->requires_grad) {
    out->backward_fn = [ix, C, mx, denom](TensorImplT<T>& self) {
      ix->ensure_grad();
      const T g = self.grad[0];
      const T u = T(1) / static_cast<T>(C);
      for (Index i = 0; i < C; ++i)
        ix->grad[i] += g * (std::exp(ix->data[i] - mx) / denom - u);
    };
  }
  return TensorT<T>(out);
}

/// Mean binary cross-entropy. Probabilities are clamped to
/// [clamp, 1-clamp] inside the logs; targets are constants.
template <typename T>
TensorT<T> bce(const TensorT<T>& probs, const std::vector<T>& targets, T clamp = T(1e-7)) {
  if (probs.numel() != static_cast<Index>(targets.size()))
    fail("bce", "probs/targets size mismatch");
  const Index n = probs.numel();
  if (n < 1) fail("bce", "empty input");
  auto ix = probs.impl();
  auto out = detail::make_node<T>(Shape{1}, {ix});
  const T lo = clamp, hi = T(1) - clamp;
  T acc = T(0);
  for (Index i = 0; i < n; ++i) {
    const T p = std::min(std::max(ix->data[i], lo), hi);
    const T t = targets[static_cast<std::size_t>(i)];
    acc -= t * std::log(p) + (T(1) - t) * std::log(T(1) - p);
  }
  out->data[0] = acc / static_cast<T>(n);
  if (out->requires_grad) {
    out->backward_fn = [ix, targets, n, lo, hi](TensorImplT<T>& self) {
      ix->ensure_grad();
      const T g = self.grad[0] / static_cast<T>(n);
      for (Index i = 0; i < n; ++i) {
        const T raw = ix->data[i];
        if (raw < lo || raw > hi) continue;  // clamped region: flat
        const T t = targets[static_cast<std::size_t>(i)];
        ix->grad[i] += g * (-t / raw + (T(1) - t) / (T(1) - raw));
      }
    };
  }
  return TensorT<T>(out);
}

/// Negative SNR in dB: -10 log10(||ref||^2 / (||ref-est||^2 + tau ||ref||^2)).
/// The reference is treated as a constant target; gradients flow to est only.
template <typename T>
TensorT<T> snr_loss(const std::vector<T>& ref, const TensorT<T>& est, T tau = T(1e-8)) {
  if (est.numel() != static_cast<Index>(ref.size())) fail("snr_loss", "ref/est size mismatch");
  const Index n = est.numel();
  if (n < 1) fail("snr_loss", "empty signals");
  auto ie = est.impl();
  auto out = detail::make_node<T>(Shape{1}, {ie});
  T rr = T(0), dd = T(0);
  for (Index i = 0; i < n; ++i) {
    const T r = ref[static_cast<std::size_t>(i)];
    const T d = r - ie->data[i];
    rr += r * r;
    dd += d * d;
  }
  if (!(rr > T(0))) fail("snr_loss", "reference has zero energy");
  const T denom = dd + tau * rr;
  const T ln10 = static_cast<T>(2.302585092994045684);
  out->data[0] = -T(10) / ln10 * (std::log(rr) - std::log(denom));
  if (out->requires_grad) {
    out->backward_fn = [ie, ref, n, denom, ln10](TensorImplT<T>& self) {
      ie->ensure_grad();
      const T g = self.grad[0] * (-T(20) / (ln10 * denom));
      for (Index i = 0; i < n; ++i)
        ie->grad[i] += g * (ref[static_cast<std::size_t>(i)] - ie->data[i]);
    };
  }
  return TensorT<T>(out);
}

/// Silent-slot penalty in dB relative to the mixture energy:
/// 10 log10((||est||^2 + tau ||mix||^2) / ||mix||^2). Bottoms out at
/// 10 log10(tau) when the estimate reaches zero, the same floor the SNR
/// terms have, so active and silent slots are commensurable under PIT.
template <typename T>
TensorT<T> silent_energy_loss(const TensorT<T>& est, T mix_energy, T tau = T(1e-8)) {
  if (!(mix_energy > T(0))) fail("silent_energy_loss", "mixture has zero energy");
  const Index n = est.numel();
  if (n < 1) fail("silent_energy_loss", "empty estimate");
  auto ie = est.impl();
  auto out = detail::make_node<T>(Shape{1}, {ie});
  T ee = T(0);
  for (Index i = 0; i < n; ++i) ee += ie->data[i] * ie->data[i];
  const T num = ee + tau * mix_energy;
  const T ln10 = static_cast<T>(2.302585092994045684);
  out->data[0] = T(10) / ln10 * (std::log(num) - std::log(mix_energy));
  if (out->requires_grad) {
    out->backward_fn = [ie, n, num, ln10](TensorImplT<T>& self) {
      ie->ensure_grad();
      const T g = self.grad[0] * (T(20) / (ln10 * num));
      for (Index i = 0; i < n; ++i) ie->grad[i] += g * ie->data[i];
    };
  }
  return TensorT<T>(out);
}

}  // namespace tg
}  // namespace scenesep

#endif  // SCENESEP_LOSSES_HPP_
