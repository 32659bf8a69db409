// scenesep/tensor.hpp

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

#ifndef SCENESEP_TENSOR_HPP_
#define SCENESEP_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "scenesep/rng.hpp"

namespace scenesep {
namespace tg {

using Index = std::int64_t;
using Shape = std::vector<Index>;

inline Index numel_of(const Shape& s) {
  Index n = 1;
  for (Index e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

[[noreturn]] inline void fail(const std::string& op, const std::string& what) {
  throw std::invalid_argument(op + ": " + what);
}

template <typename T>
struct TensorImplT {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorImplT>> parents;
  std::function<void(TensorImplT&)> backward_fn;

  Index numel() const { return static_cast<Index>(data.size()); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

/// Value handle over a node of the backward graph. Data is immutable after
/// construction except for gradient accumulation during backward().
template <typename T>
class TensorT {
 public:
  using Impl = TensorImplT<T>;
  using Scalar = T;

  TensorT() = default;
  explicit TensorT(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

  static TensorT zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), T(0), requires_grad);
  }

  static TensorT filled(Shape shape, T value, bool requires_grad = false) {
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    validate_shape(impl->shape);
    impl->data.assign(static_cast<std::size_t>(numel_of(impl->shape)), value);
    impl->requires_grad = requires_grad;
    return TensorT(std::move(impl));
  }

  static TensorT from_data(Shape shape, std::vector<T> data, bool requires_grad = false) {
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    validate_shape(impl->shape);
    if (static_cast<Index>(data.size()) != numel_of(impl->shape))
      fail("tensor", "data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(impl->shape));
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return TensorT(std::move(impl));
  }

  static TensorT scalar(T value, bool requires_grad = false) {
    return from_data({1}, {value}, requires_grad);
  }

  /// Gaussian init, scaled; the usual weight initializer.
  static TensorT randn(Shape shape, Rng& rng, T stddev = T(1), bool requires_grad = false) {
    TensorT t = zeros(std::move(shape), requires_grad);
    for (auto& v : t.impl_->data) v = static_cast<T>(rng.normal()) * stddev;
    return t;
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  Index dim(std::size_t i) const { return impl_->shape[i]; }
  Index rank() const { return static_cast<Index>(impl_->shape.size()); }
  Index numel() const { return impl_->numel(); }
  bool requires_grad() const { return impl_->requires_grad; }

  const std::vector<T>& data() const { return impl_->data; }
  /// Mutable view of the payload; for construction/loading only, never for
  /// tensors that already participate in a graph.
  std::vector<T>& data_mut() { return impl_->data; }

  const std::vector<T>& grad() const {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
  }

  T item() const {
    if (numel() != 1) fail("item", "tensor has " + std::to_string(numel()) + " elements");
    return impl_->data[0];
  }

  T at(std::initializer_list<Index> idx) const {
    Index flat = 0, stride = 1;
    const Shape& s = impl_->shape;
    std::vector<Index> v(idx);
    for (Index k = static_cast<Index>(s.size()) - 1; k >= 0; --k) {
      flat += v[static_cast<std::size_t>(k)] * stride;
      stride *= s[static_cast<std::size_t>(k)];
    }
    return impl_->data[static_cast<std::size_t>(flat)];
  }

  std::shared_ptr<Impl> impl() const { return impl_; }

  /// Reverse-mode pass from a scalar root. Single-threaded by contract.
  void backward(bool check_finite = false) const {
    if (numel() != 1) fail("backward", "root must be scalar, got " + shape_str(shape()));
    if (!impl_->requires_grad) fail("backward", "root does not require grad");

    std::vector<Impl*> order;
    topo_sort(impl_.get(), order);
    impl_->ensure_grad();
    impl_->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Impl* node = *it;
      if (node->backward_fn) node->backward_fn(*node);
    }
    if (check_finite) {
      for (Impl* node : order) {
        for (T g : node->grad)
          if (!std::isfinite(static_cast<double>(g)))
            throw std::runtime_error("backward: non-finite gradient encountered");
      }
    }
  }

 private:
  static void validate_shape(const Shape& s) {
    for (Index e : s)
      if (e <= 0) fail("tensor", "non-positive extent in shape " + shape_str(s));
  }

  static void topo_sort(Impl* root, std::vector<Impl*>& order) {
    std::unordered_set<Impl*> seen;
    std::vector<std::pair<Impl*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        Impl* p = node->parents[next++].get();
        if (p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.emplace_back(p, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<Impl> impl_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

namespace detail {

template <typename T>
std::shared_ptr<TensorImplT<T>> make_node(Shape shape,
                                          std::vector<std::shared_ptr<TensorImplT<T>>> grad_parents) {
  auto impl = std::make_shared<TensorImplT<T>>();
  impl->shape = std::move(shape);
  impl->data.assign(static_cast<std::size_t>(numel_of(impl->shape)), T(0));
  for (auto& p : grad_parents)
    if (p->requires_grad) impl->parents.push_back(p);
  impl->requires_grad = !impl->parents.empty();
  return impl;
}

template <typename T>
void check_same_shape(const char* op, const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape() != b.shape())
    fail(op, "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  detail::check_same_shape("add", a, b);
  auto ia = a.impl(), ib = b.impl();
  auto out = detail::make_node<T>(a.shape(), {ia, ib});
  const std::size_t n = ia->data.size();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = ia->data[i] + ib->data[i];
  if (out->requires_grad) {
    out->backward_fn = [ia, ib](TensorImplT<T>& self) {
      if (ia->requires_grad) {
        ia->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) ia->grad[i] += self.grad[i];
      }
      if (ib->requires_grad) {
        ib->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) ib->grad[i] += self.grad[i];
      }
    };
  }
  return TensorT<T>(out);
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  detail::check_same_shape("sub", a, b);
  auto ia = a.impl(), ib = b.impl();
  auto out = detail::make_node<T>(a.shape(), {ia, ib});
  const std::size_t n = ia->data.size();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = ia->data[i] - ib->data[i];
  if (out->requires_grad) {
    out->backward_fn = [ia, ib](TensorImplT<T>& self) {
      if (ia->requires_grad) {
        ia->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) ia->grad[i] += self.grad[i];
      }
      if (ib->requires_grad) {
        ib->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) ib->grad[i] -= self.grad[i];
      }
    };
  }
  return TensorT<T>(out);
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  detail::check_same_shape("mul", a, b);
  auto ia = a.impl(), ib = b.impl();
  auto out = detail::make_node<T>(a.shape(), {ia, ib});
  const std::size_t n = ia->data.size();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = ia->data[i] * ib->data[i];
  if (out->requires_grad) {
    out->backward_fn = [ia, ib](TensorImplT<T>& self) {
      if (ia->requires_grad) {
        ia->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) ia->grad[i] += self.grad[i] * ib->data[i];
      }
      if (ib->requires_grad) {
        ib->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) ib->grad[i] += self.grad[i] * ia->data[i];
      }
    };
  }
  return TensorT<T>(out);
}

/// out = scale * x + shift, elementwise with scalars.
template <typename T>
TensorT<T> affine(const TensorT<T>& x, T scale, T shift) {
  auto ix = x.impl();
  auto out = detail::make_node<T>(x.shape(), {ix});
  const std::size_t n = ix->data.size();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = scale * ix->data[i] + shift;
  if (out->requires_grad) {
    out->backward_fn = [ix, scale](TensorImplT<T>& self) {
      ix->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ix->grad[i] += scale * self.grad[i];
    };
  }
  return TensorT<T>(out);
}

template <typename T>
TensorT<T> scale(const TensorT<T>& x, T s) {
  return affine(x, s, T(0));
}

// ---------------------------------------------------------------------------
// Unary nonlinearities
// ---------------------------------------------------------------------------

namespace detail {

template <typename T, typename Fwd, typename Bwd>
TensorT<T> unary_op(const char*, const TensorT<T>& x, Fwd fwd, Bwd dydx_from_xy) {
  auto ix = x.impl();
  auto out = make_node<T>(x.shape(), {ix});
  const std::size_t n = ix->data.size();
  for (std::size_t i = 0; i < n; ++i) out->data[i] = fwd(ix->data[i]);
  if (out->requires_grad) {
    out->backward_fn = [ix, dydx_from_xy](TensorImplT<T>& self) {
      ix->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        ix->grad[i] += self.grad[i] * dydx_from_xy(ix->data[i], self.data[i]);
    };
  }
  return TensorT<T>(out);
}

}  // namespace detail

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  return detail::unary_op(
      "relu", x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
TensorT<T> tanh_op(const TensorT<T>& x) {
  return detail::unary_op(
      "tanh", x, [](T v) { return std::tanh(v); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x) {
  return detail::unary_op(
      "sigmoid", x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
TensorT<T> sqrt_op(const TensorT<T>& x) {
  return detail::unary_op(
      "sqrt", x, [](T v) { return std::sqrt(v); },
      [](T, T y) { return T(1) / (T(2) * y); });
}

/// max(x, floor); gradient passes only where x > floor.
template <typename T>
TensorT<T> clamp_min(const TensorT<T>& x, T floor) {
  return detail::unary_op(
      "clamp_min", x, [floor](T v) { return v > floor ? v : floor; },
      [floor](T v, T) { return v > floor ? T(1) : T(0); });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> sum(const TensorT<T>& x) {
  auto ix = x.impl();
  auto out = detail::make_node<T>({1}, {ix});
  T acc = T(0);
  for (T v : ix->data) acc += v;
  out->data[0] = acc;
  if (out->requires_grad) {
    out->backward_fn = [ix](TensorImplT<T>& self) {
      ix->ensure_grad();
      const T g = self.grad[0];
      for (auto& gv : ix->grad) gv += g;
    };
  }
  return TensorT<T>(out);
}

template <typename T>
TensorT<T> mean_all(const TensorT<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

/// Mean over one axis, removing it.
template <typename T>
TensorT<T> mean_axis(const TensorT<T>& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) fail("mean_axis", "axis out of range");
  Shape os;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) os.push_back(s[i]);
  if (os.empty()) os.push_back(1);
  auto ix = x.impl();
  auto out = detail::make_node<T>(os, {ix});

  Index outer = 1, mid = s[axis], inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const T inv = T(1) / static_cast<T>(mid);
  for (Index o = 0; o < outer; ++o)
    for (Index m = 0; m < mid; ++m) {
      const T* src = ix->data.data() + (o * mid + m) * inner;
      T* dst = out->data.data() + o * inner;
      for (Index i = 0; i < inner; ++i) dst[i] += src[i] * inv;
    }
  if (out->requires_grad) {
    out->backward_fn = [ix, outer, mid, inner, inv](TensorImplT<T>& self) {
      ix->ensure_grad();
      for (Index o = 0; o < outer; ++o)
        for (Index m = 0; m < mid; ++m) {
          T* dst = ix->grad.data() + (o * mid + m) * inner;
          const T* g = self.grad.data() + o * inner;
          for (Index i = 0; i < inner; ++i) dst[i] += g[i] * inv;
        }
    };
  }
  return TensorT<T>(out);
}

// ---------------------------------------------------------------------------
// Shape manipulation
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> reshape(const TensorT<T>& x, Shape shape) {
  if (numel_of(shape) != x.numel())
    fail("reshape", "cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  auto ix = x.impl();
  auto out = detail::make_node<T>(std::move(shape), {ix});
  out->data = ix->data;
  if (out->requires_grad) {
    out->backward_fn = [ix](TensorImplT<T>& self) {
      ix->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ix->grad[i] += self.grad[i];
    };
  }
  return TensorT<T>(out);
}

template <typename T>
TensorT<T> permute(const TensorT<T>& x, std::vector<std::size_t> perm) {
  const Shape& s = x.shape();
  if (perm.size() != s.size()) fail("permute", "perm rank mismatch");
  Shape os(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) os[i] = s[perm[i]];
  auto ix = x.impl();
  auto out = detail::make_node<T>(os, {ix});

  const std::size_t r = s.size();
  std::vector<Index> in_strides(r, 1), out_strides(r, 1);
  for (Index i = static_cast<Index>(r) - 2; i >= 0; --i)
    in_strides[i] = in_strides[i + 1] * s[i + 1];
  for (Index i = static_cast<Index>(r) - 2; i >= 0; --i)
    out_strides[i] = out_strides[i + 1] * os[i + 1];

  // map: flat output index -> flat input index
  const Index n = x.numel();
  std::vector<Index> src_of(static_cast<std::size_t>(n));
  std::vector<Index> idx(r, 0);
  for (Index flat = 0; flat < n; ++flat) {
    Index src = 0;
    for (std::size_t d = 0; d < r; ++d) src += idx[d] * in_strides[perm[d]];
    src_of[static_cast<std::size_t>(flat)] = src;
    for (Index d = static_cast<Index>(r) - 1; d >= 0; --d) {
      if (++idx[d] < os[d]) break;
      idx[d] = 0;
    }
  }
  for (Index i = 0; i < n; ++i) out->data[i] = ix->data[src_of[i]];
  if (out->requires_grad) {
    out->backward_fn = [ix, src_of = std::move(src_of)](TensorImplT<T>& self) {
      ix->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) ix->grad[src_of[i]] += self.grad[i];
    };
  }
  return TensorT<T>(out);
}

template <typename T>
TensorT<T> concat(const std::vector<TensorT<T>>& parts, std::size_t axis) {
  if (parts.empty()) fail("concat", "empty part list");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) fail("concat", "axis out of range");
  Shape os = s0;
  os[axis] = 0;
  for (const auto& p : parts) {
    const Shape& sp = p.shape();
    if (sp.size() != s0.size()) fail("concat", "rank mismatch");
    for (std::size_t d = 0; d < s0.size(); ++d)
      if (d != axis && sp[d] != s0[d])
        fail("concat", "extent mismatch on axis " + std::to_string(d));
    os[axis] += sp[axis];
  }
  std::vector<std::shared_ptr<TensorImplT<T>>> impls;
  for (const auto& p : parts) impls.push_back(p.impl());
  auto out = detail::make_node<T>(os, impls);

  Index outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s0[i];
  for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= s0[i];
  const Index out_mid = os[axis];
  Index off = 0;
  std::vector<Index> offsets;
  for (const auto& ip : impls) {
    offsets.push_back(off);
    const Index mid = ip->shape[axis];
    for (Index o = 0; o < outer; ++o)
      std::copy_n(ip->data.data() + o * mid * inner, mid * inner,
                  out->data.data() + (o * out_mid + off) * inner);
    off += mid;
  }
  if (out->requires_grad) {
    out->backward_fn = [impls, offsets, outer, inner, out_mid, axis](TensorImplT<T>& self) {
      for (std::size_t k = 0; k < impls.size(); ++k) {
        auto& ip = impls[k];
        if (!ip->requires_grad) continue;
        ip->ensure_grad();
        const Index mid = ip->shape[axis];
        for (Index o = 0; o < outer; ++o) {
          const T* g = self.grad.data() + (o * out_mid + offsets[k]) * inner;
          T* dst = ip->grad.data() + o * mid * inner;
          for (Index i = 0; i < mid * inner; ++i) dst[i] += g[i];
        }
      }
    };
  }
  return TensorT<T>(out);
}

template <typename T>
TensorT<T> slice(const TensorT<T>& x, std::size_t axis, Index start, Index len) {
  const Shape& s = x.shape();
  if (axis >= s.size()) fail("slice", "axis out of range");
  if (start < 0 || len <= 0 || start + len > s[axis])
    fail("slice", "range [" + std::to_string(start) + "," + std::to_string(start + len) +
                      ") out of extent " + std::to_string(s[axis]));
  Shape os = s;
  os[axis] = len;
  auto ix = x.impl();
  auto out = detail::make_node<T>(os, {ix});

  Index outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const Index mid = s[axis];
  for (Index o = 0; o < outer; ++o)
    std::copy_n(ix->data.data() + (o * mid + start) * inner, len * inner,
                out->data.data() + o * len * inner);
  if (out->requires_grad) {
    out->backward_fn = [ix, outer, inner, mid, start, len](TensorImplT<T>& self) {
      ix->ensure_grad();
      for (Index o = 0; o < outer; ++o) {
        const T* g = self.grad.data() + o * len * inner;
        T* dst = ix->grad.data() + (o * mid + start) * inner;
        for (Index i = 0; i < len * inner; ++i) dst[i] += g[i];
      }
    };
  }
  return TensorT<T>(out);
}

// ---------------------------------------------------------------------------
// Channel broadcasts (FiLM-style: vector over leading axis)
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void check_channel(const char* op, const TensorT<T>& x, const TensorT<T>& v) {
  if (v.rank() != 1 || v.dim(0) != x.dim(0))
    fail(op, "channel vector " + shape_str(v.shape()) + " does not match leading extent of " +
                 shape_str(x.shape()));
}

}  // namespace detail

/// out[c, ...] = x[c, ...] * v[c]
template <typename T>
TensorT<T> mul_channel(const TensorT<T>& x, const TensorT<T>& v) {
  detail::check_channel("mul_channel", x, v);
  auto ix = x.impl(), iv = v.impl();
  auto out = detail::make_node<T>(x.shape(), {ix, iv});
  const Index c = x.dim(0), inner = x.numel() / c;
  for (Index i = 0; i < c; ++i) {
    const T s = iv->data[i];
    const T* src = ix->data.data() + i * inner;
    T* dst = out->data.data() + i * inner;
    for (Index j = 0; j < inner; ++j) dst[j] = src[j] * s;
  }
  if (out->requires_grad) {
    out->backward_fn = [ix, iv, c, inner](TensorImplT<T>& self) {
      if (ix->requires_grad) {
        ix->ensure_grad();
        for (Index i = 0; i < c; ++i) {
          const T s = iv->data[i];
          const T* g = self.grad.data() + i * inner;
          T* dst = ix->grad.data() + i * inner;
          for (Index j = 0; j < inner; ++j) dst[j] += g[j] * s;
        }
      }
      if (iv->requires_grad) {
        iv->ensure_grad();
        for (Index i = 0; i < c; ++i) {
          const T* g = self.grad.data() + i * inner;
          const T* src = ix->data.data() + i * inner;
          T acc = T(0);
          for (Index j = 0; j < inner; ++j) acc += g[j] * src[j];
          iv->grad[i] += acc;
        }
      }
    };
  }
  return TensorT<T>(out);
}

/// out[c, ...] = x[c, ...] + v[c]
template <typename T>
TensorT<T> add_channel(const TensorT<T>& x, const TensorT<T>& v) {
  detail::check_channel("add_channel", x, v);
  auto ix = x.impl(), iv = v.impl();
  auto out = detail::make_node<T>(x.shape(), {ix, iv});
  const Index c = x.dim(0), inner = x.numel() / c;
  for (Index i = 0; i < c; ++i) {
    const T s = iv->data[i];
    const T* src = ix->data.data() + i * inner;
    T* dst = out->data.data() + i * inner;
    for (Index j = 0; j < inner; ++j) dst[j] = src[j] + s;
  }
  if (out->requires_grad) {
    out->backward_fn = [ix, iv, c, inner](TensorImplT<T>& self) {
      if (ix->requires_grad) {
        ix->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) ix->grad[i] += self.grad[i];
      }
      if (iv->requires_grad) {
        iv->ensure_grad();
        for (Index i = 0; i < c; ++i) {
          const T* g = self.grad.data() + i * inner;
          T acc = T(0);
          for (Index j = 0; j < inner; ++j) acc += g[j];
          iv->grad[i] += acc;
        }
      }
    };
  }
  return TensorT<T>(out);
}

// ---------------------------------------------------------------------------
// Softmax over a 1-D tensor
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> softmax_1d(const TensorT<T>& x) {
  if (x.rank() != 1) fail("softmax_1d", "expected rank-1 input, got " + shape_str(x.shape()));
  auto ix = x.impl();
  auto out = detail::make_node<T>(x.shape(), {ix});
  const std::size_t n = ix->data.size();
  T m = ix->data[0];
  for (T v : ix->data) m = std::max(m, v);
  T z = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    out->data[i] = std::exp(ix->data[i] - m);
    z += out->data[i];
  }
  const T inv = T(1) / z;
  for (auto& v : out->data) v *= inv;
  if (out->requires_grad) {
    out->backward_fn = [ix](TensorImplT<T>& self) {
      ix->ensure_grad();
      T dot = T(0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) dot += self.grad[i] * self.data[i];
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        ix->grad[i] += self.data[i] * (self.grad[i] - dot);
    };
  }
  return TensorT<T>(out);
}

}  // namespace tg
}  // namespace scenesep

#endif  // SCENESEP_TENSOR_HPP_
