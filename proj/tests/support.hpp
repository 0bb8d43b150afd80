// Copyright 2026 The hginet-desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "hgi/rng.hpp"
#include "hgi/tensor.hpp"

namespace hgi::test {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0, bool grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(shape, std::move(v), grad);
}

// Values bounded away from zero, for ops with a kink there.
inline Tensor away_from_zero(const Shape& shape, Rng& rng, double margin = 0.05) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) {
    do x = rng.uniform(-1.0, 1.0);
    while (std::fabs(x) < margin);
  }
  return Tensor(shape, std::move(v), true);
}

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
};

// Central differences against the taped gradient of a scalar loss. At most
// `per_leaf` entries of each leaf are probed (evenly strided).
inline GradCheck grad_check(const std::function<Tensor()>& loss,
                            std::vector<Tensor> leaves, double step = 1e-5,
                            std::size_t per_leaf = 1000000, double floor = 1e-6) {
  for (auto& l : leaves) l.zero_grad();
  {
    Tape tape;
    backward(loss());
  }
  GradCheck out;
  for (auto& leaf : leaves) {
    const auto analytic = leaf.grad();
    const std::size_t n = leaf.numel();
    const std::size_t stride = std::max<std::size_t>(1, n / per_leaf);
    for (std::size_t i = 0; i < n; i += stride) {
      auto w = leaf.mutable_values();
      const double orig = w[i];
      w[i] = orig + step;
      const double up = loss().item();
      leaf.mutable_values()[i] = orig - step;
      const double down = loss().item();
      leaf.mutable_values()[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      out.max_rel = std::max(out.max_rel, rel_err(analytic[i], numeric, floor));
      ++out.checked;
    }
  }
  return out;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  const auto x = a.values(), y = b.values();
  return std::equal(x.begin(), x.end(), y.begin(), y.end(),
                    [](double p, double q) {
                      return std::memcmp(&p, &q, sizeof p) == 0;
                    });
}

}  // namespace hgi::test
