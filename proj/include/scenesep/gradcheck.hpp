// scenesep/gradcheck.hpp

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

#ifndef SCENESEP_GRADCHECK_HPP_
#define SCENESEP_GRADCHECK_HPP_

#include <functional>

#include "scenesep/tensor.hpp"

namespace scenesep {
namespace tg {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  Index worst_param = -1;
  Index worst_index = -1;
};

/// Compares reverse-mode gradients of a scalar-valued function against
/// central finite differences, elementwise over every listed parameter.
/// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
/// Throws if the function value or either gradient is non-finite.
inline GradCheckResult gradcheck(const std::function<TensorT<double>()>& fn,
                                 const std::vector<TensorT<double>>& params,
                                 double step = 1e-5) {
  for (const auto& p : params)
    if (!p.impl()->requires_grad) fail("gradcheck", "parameter does not require grad");

  TensorT<double> y = fn();
  if (y.numel() != 1) fail("gradcheck", "function must return a scalar");
  if (!std::isfinite(y.impl()->data[0])) fail("gradcheck", "non-finite function value");
  for (const auto& p : params) p.impl()->grad.clear();
  y.backward(true);

  std::vector<std::vector<double>> analytic(params.size());
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto impl = params[pi].impl();
    analytic[pi] = impl->grad.empty() ? std::vector<double>(impl->data.size(), 0.0) : impl->grad;
    for (double g : analytic[pi])
      if (!std::isfinite(g)) fail("gradcheck", "non-finite analytic gradient");
  }

  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto impl = params[pi].impl();
    for (std::size_t i = 0; i < impl->data.size(); ++i) {
      const double keep = impl->data[i];
      impl->data[i] = keep + step;
      const double up = fn().impl()->data[0];
      impl->data[i] = keep - step;
      const double dn = fn().impl()->data[0];
      impl->data[i] = keep;
      if (!std::isfinite(up) || !std::isfinite(dn))
        fail("gradcheck", "non-finite value during finite differencing");
      const double numeric = (up - dn) / (2.0 * step);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
        res.worst_param = static_cast<Index>(pi);
        res.worst_index = static_cast<Index>(i);
      }
    }
  }
  return res;
}

}  // namespace tg
}  // namespace scenesep

#endif  // SCENESEP_GRADCHECK_HPP_
