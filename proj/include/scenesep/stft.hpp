// scenesep/stft.hpp

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

#ifndef SCENESEP_STFT_HPP_
#define SCENESEP_STFT_HPP_

#include <complex>

#include "scenesep/tensor.hpp"

namespace scenesep {
namespace tg {

// ---------------------------------------------------------------------------
// Radix-2 FFT, double precision throughout (twiddles from std::polar).
// ---------------------------------------------------------------------------

inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) fail("fft", "length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double pi = 3.14159265358979323846;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

// ---------------------------------------------------------------------------
// Framing parameters: 512-sample periodic Hann window, hop 256, 257 bins.
// ---------------------------------------------------------------------------

struct StftConfig {
  Index window = 512;
  Index hop = 256;

  Index bins() const { return window / 2 + 1; }
  Index frames(Index n_samples) const {
    if (n_samples < window) fail("stft", "input length " + std::to_string(n_samples) +
                                             " shorter than window " + std::to_string(window));
    return (n_samples - window) / hop + 1;
  }
  Index coverage(Index n_frames) const { return (n_frames - 1) * hop + window; }
};

inline std::vector<double> hann_window(Index n) {
  // periodic form: exact overlap-add at 50% hop
  std::vector<double> w(static_cast<std::size_t>(n));
  const double pi = 3.14159265358979323846;
  for (Index i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * pi * static_cast<double>(i) /
                                                           static_cast<double>(n)));
  return w;
}

/// Complex spectrogram, row-major [bins, frames].
struct Spectrogram {
  Index bins = 0;
  Index frames = 0;
  std::vector<std::complex<double>> values;

  std::complex<double>& at(Index k, Index t) { return values[static_cast<std::size_t>(k * frames + t)]; }
  const std::complex<double>& at(Index k, Index t) const {
    return values[static_cast<std::size_t>(k * frames + t)];
  }
};

template <typename T>
Spectrogram stft(const std::vector<T>& x, const StftConfig& cfg = {}) {
  const Index n = static_cast<Index>(x.size());
  const Index frames = cfg.frames(n);
  const Index bins = cfg.bins();
  const std::vector<double> w = hann_window(cfg.window);
  Spectrogram out;
  out.bins = bins;
  out.frames = frames;
  out.values.assign(static_cast<std::size_t>(bins * frames), {0.0, 0.0});
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.window));
  for (Index f = 0; f < frames; ++f) {
    const Index base = f * cfg.hop;
    for (Index i = 0; i < cfg.window; ++i)
      buf[static_cast<std::size_t>(i)] = {w[static_cast<std::size_t>(i)] *
                                              static_cast<double>(x[static_cast<std::size_t>(base + i)]),
                                          0.0};
    fft_inplace(buf, false);
    for (Index k = 0; k < bins; ++k) out.at(k, f) = buf[static_cast<std::size_t>(k)];
  }
  return out;
}

/// Weighted overlap-add inverse of an unmodified or masked spectrogram.
/// Output has coverage(frames) samples; positions where the window-square
/// sum vanishes (sample 0 only, for the periodic Hann) decode to zero.
inline std::vector<double> istft(const Spectrogram& spec, const StftConfig& cfg = {}) {
  if (spec.bins != cfg.bins()) fail("istft", "bin count mismatch");
  const Index n = cfg.coverage(spec.frames);
  const std::vector<double> w = hann_window(cfg.window);
  std::vector<double> num(static_cast<std::size_t>(n), 0.0), den(static_cast<std::size_t>(n), 0.0);
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.window));
  for (Index f = 0; f < spec.frames; ++f) {
    for (Index k = 0; k < spec.bins; ++k) buf[static_cast<std::size_t>(k)] = spec.at(k, f);
    buf[0].imag(0.0);
    buf[static_cast<std::size_t>(spec.bins - 1)].imag(0.0);
    for (Index k = spec.bins; k < cfg.window; ++k)
      buf[static_cast<std::size_t>(k)] = std::conj(buf[static_cast<std::size_t>(cfg.window - k)]);
    fft_inplace(buf, true);
    const Index base = f * cfg.hop;
    for (Index i = 0; i < cfg.window; ++i) {
      const double wi = w[static_cast<std::size_t>(i)];
      num[static_cast<std::size_t>(base + i)] += wi * buf[static_cast<std::size_t>(i)].real();
      den[static_cast<std::size_t>(base + i)] += wi * wi;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double d = den[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = d > 1e-12 ? num[static_cast<std::size_t>(i)] / d : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Autograd bridge: spectrogram constants in, differentiable inverse out.
// ---------------------------------------------------------------------------

/// STFT of one channel as a pair of constant tensors (real, imag), [bins, T].
template <typename T>
std::pair<TensorT<T>, TensorT<T>> stft_tensors(const std::vector<T>& x, const StftConfig& cfg = {}) {
  Spectrogram s = stft(x, cfg);
  std::vector<T> re(static_cast<std::size_t>(s.bins * s.frames));
  std::vector<T> im(re.size());
  for (std::size_t i = 0; i < re.size(); ++i) {
    re[i] = static_cast<T>(s.values[i].real());
    im[i] = static_cast<T>(s.values[i].imag());
  }
  return {TensorT<T>::from_data({s.bins, s.frames}, std::move(re)),
          TensorT<T>::from_data({s.bins, s.frames}, std::move(im))};
}

namespace detail {

// Shared by forward and adjoint: per-frame Hermitian-extended inverse FFT.
// The imaginary parts of the DC and Nyquist bins have zero coefficient in the
// synthesis formula; the adjoint mirrors that exactly.
template <typename T>
void istft_accumulate(const TensorImplT<T>& re, const TensorImplT<T>& im, const StftConfig& cfg,
                      const std::vector<double>& w, const std::vector<double>& inv_den,
                      std::vector<double>& out) {
  const Index bins = re.shape[0], frames = re.shape[1];
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.window));
  for (Index f = 0; f < frames; ++f) {
    for (Index k = 0; k < bins; ++k)
      buf[static_cast<std::size_t>(k)] = {static_cast<double>(re.data[k * frames + f]),
                                          static_cast<double>(im.data[k * frames + f])};
    buf[0].imag(0.0);
    buf[static_cast<std::size_t>(bins - 1)].imag(0.0);
    for (Index k = bins; k < cfg.window; ++k)
      buf[static_cast<std::size_t>(k)] = std::conj(buf[static_cast<std::size_t>(cfg.window - k)]);
    fft_inplace(buf, true);
    const Index base = f * cfg.hop;
    for (Index i = 0; i < cfg.window; ++i)
      out[static_cast<std::size_t>(base + i)] += w[static_cast<std::size_t>(i)] *
                                                 buf[static_cast<std::size_t>(i)].real() *
                                                 inv_den[static_cast<std::size_t>(base + i)];
  }
}

}  // namespace detail

/// Differentiable weighted-overlap-add inverse STFT. Inputs are the real and
/// imaginary parts [bins, T]; output is a waveform tensor of length
/// coverage(T). Gradients reach both inputs through the exact adjoint of the
/// linear synthesis map.
template <typename T>
TensorT<T> istft_op(const TensorT<T>& re, const TensorT<T>& im, const StftConfig& cfg = {}) {
  if (re.rank() != 2 || im.rank() != 2) fail("istft", "expected [bins, frames] inputs");
  if (re.shape() != im.shape()) fail("istft", "real/imag shape mismatch");
  if (re.dim(0) != cfg.bins()) fail("istft", "bin count " + std::to_string(re.dim(0)) +
                                                 " does not match window " + std::to_string(cfg.window));
  const Index frames = re.dim(1);
  const Index n = cfg.coverage(frames);
  auto ire = re.impl(), iim = im.impl();
  auto out = detail::make_node<T>({n}, {ire, iim});

  const std::vector<double> w = hann_window(cfg.window);
  std::vector<double> den(static_cast<std::size_t>(n), 0.0);
  for (Index f = 0; f < frames; ++f)
    for (Index i = 0; i < cfg.window; ++i)
      den[static_cast<std::size_t>(f * cfg.hop + i)] += w[static_cast<std::size_t>(i)] *
                                                        w[static_cast<std::size_t>(i)];
  std::vector<double> inv_den(den.size());
  for (std::size_t i = 0; i < den.size(); ++i) inv_den[i] = den[i] > 1e-12 ? 1.0 / den[i] : 0.0;

  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  detail::istft_accumulate(*ire, *iim, cfg, w, inv_den, acc);
  for (Index i = 0; i < n; ++i) out->data[i] = static_cast<T>(acc[static_cast<std::size_t>(i)]);

  if (out->requires_grad) {
    out->backward_fn = [ire, iim, cfg, w, inv_den, frames, n](TensorImplT<T>& self) {
      const Index bins = ire->shape[0];
      std::vector<std::complex<double>> buf(static_cast<std::size_t>(cfg.window));
      if (ire->requires_grad) ire->ensure_grad();
      if (iim->requires_grad) iim->ensure_grad();
      for (Index f = 0; f < frames; ++f) {
        const Index base = f * cfg.hop;
        for (Index i = 0; i < cfg.window; ++i) {
          const double g = static_cast<double>(self.grad[base + i]) *
                           inv_den[static_cast<std::size_t>(base + i)];
          buf[static_cast<std::size_t>(i)] = {w[static_cast<std::size_t>(i)] * g, 0.0};
        }
        fft_inplace(buf, false);
        const double inv_n = 1.0 / static_cast<double>(cfg.window);
        for (Index k = 0; k < bins; ++k) {
          const double c = (k == 0 || k == bins - 1) ? 1.0 : 2.0;
          if (ire->requires_grad)
            ire->grad[k * frames + f] +=
                static_cast<T>(c * inv_n * buf[static_cast<std::size_t>(k)].real());
          if (iim->requires_grad && k != 0 && k != bins - 1)
            iim->grad[k * frames + f] +=
                static_cast<T>(c * inv_n * buf[static_cast<std::size_t>(k)].imag());
        }
      }
    };
  }
  return TensorT<T>(out);
}

}  // namespace tg
}  // namespace scenesep

#endif  // SCENESEP_STFT_HPP_
