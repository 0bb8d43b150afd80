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

#include <cmath>
#include <numbers>

#include "hgi/error.hpp"
#include "hgi/tensor.hpp"

namespace hgi {
namespace {

// For each flat index of `a`, the flat index of the broadcast operand `b`.
// Empty when the shapes are identical.
std::vector<std::size_t> broadcast_map(const Shape& a, const Shape& b,
                                       const char* op) {
  if (a == b) return {};
  const std::size_t n = shape_numel(a);
  if (shape_numel(b) == 1) return std::vector<std::size_t>(n, 0);
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": cannot broadcast " +
                         shape_str(b) + " into " + shape_str(a));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i] != a[i] && b[i] != 1) {
      throw DimensionError(std::string(op) + ": cannot broadcast " +
                           shape_str(b) + " into " + shape_str(a));
    }
  }
  const std::size_t rank = a.size();
  std::vector<std::size_t> bstride(rank, 0);
  std::size_t s = 1;
  for (std::size_t i = rank; i-- > 0;) {
    bstride[i] = b[i] == 1 ? 0 : s;
    s *= b[i];
  }
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    map[flat] = off;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      off += bstride[d];
      if (idx[d] < a[d]) break;
      off -= bstride[d] * idx[d];
      idx[d] = 0;
    }
  }
  return map;
}

enum class BinOp { kAdd, kSub, kMul, kDiv };

Tensor binary(const Tensor& a, const Tensor& b, BinOp op, const char* name) {
  auto map = broadcast_map(a.shape(), b.shape(), name);
  const auto av = a.values();
  const auto bv = b.values();
  const std::size_t n = av.size();
  std::vector<double> out(n);
  auto bi = [&](std::size_t i) { return map.empty() ? i : map[i]; };
  switch (op) {
    case BinOp::kAdd:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + bv[bi(i)];
      break;
    case BinOp::kSub:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] - bv[bi(i)];
      break;
    case BinOp::kMul:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * bv[bi(i)];
      break;
    case BinOp::kDiv:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] / bv[bi(i)];
      break;
  }
  const bool rec = detail::should_record({&a, &b});
  return detail::make_result(
      a.shape(), std::move(out), rec,
      [a, b, op, map = std::move(map)](const detail::TensorImpl& o) {
        const auto& g = o.grad;
        const std::size_t n = g.size();
        auto bi = [&](std::size_t i) { return map.empty() ? i : map[i]; };
        const auto av = a.values();
        const auto bv = b.values();
        if (a.requires_grad()) {
          auto& ga = detail::grad_buffer(a);
          switch (op) {
            case BinOp::kAdd:
            case BinOp::kSub:
              for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
              break;
            case BinOp::kMul:
              for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * bv[bi(i)];
              break;
            case BinOp::kDiv:
              for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] / bv[bi(i)];
              break;
          }
        }
        if (b.requires_grad()) {
          auto& gb = detail::grad_buffer(b);
          switch (op) {
            case BinOp::kAdd:
              for (std::size_t i = 0; i < n; ++i) gb[bi(i)] += g[i];
              break;
            case BinOp::kSub:
              for (std::size_t i = 0; i < n; ++i) gb[bi(i)] -= g[i];
              break;
            case BinOp::kMul:
              for (std::size_t i = 0; i < n; ++i) gb[bi(i)] += g[i] * av[i];
              break;
            case BinOp::kDiv:
              for (std::size_t i = 0; i < n; ++i) {
                const double d = bv[bi(i)];
                gb[bi(i)] -= g[i] * av[i] / (d * d);
              }
              break;
          }
        }
      });
}

// Unary op with derivative expressed through the input value x and the
// output value y.
template <typename F, typename D>
Tensor unary(const Tensor& x, F f, D dfdx) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const bool rec = detail::should_record({&x});
  return detail::make_result(x.shape(), std::move(out), rec,
                             [x, dfdx](const detail::TensorImpl& o) {
                               auto& gx = detail::grad_buffer(x);
                               const auto xv = x.values();
                               for (std::size_t i = 0; i < gx.size(); ++i) {
                                 gx[i] += o.grad[i] * dfdx(xv[i], o.data[i]);
                               }
                             });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(a, b, BinOp::kAdd, "add");
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(a, b, BinOp::kSub, "sub");
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(a, b, BinOp::kMul, "mul");
}
Tensor div(const Tensor& a, const Tensor& b) {
  return binary(a, b, BinOp::kDiv, "div");
}

Tensor add_scalar(const Tensor& x, double c) {
  return unary(
      x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& x, double c) {
  return unary(
      x, [c](double v) { return v * c; }, [c](double, double) { return c; });
}

Tensor pow_scalar(const Tensor& x, double p) {
  return unary(
      x, [p](double v) { return std::pow(v, p); },
      [p](double v, double) { return p * std::pow(v, p - 1.0); });
}

Tensor neg(const Tensor& x) { return mul_scalar(x, -1.0); }

Tensor rsub_scalar(const Tensor& x, double c) {
  return unary(
      x, [c](double v) { return c - v; }, [](double, double) { return -1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary(
      x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor gelu(const Tensor& x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  return unary(
      x,
      [](double v) {
        return 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v)));
      },
      [](double v, double) {
        const double u = kC * (v + kA * v * v * v);
        const double t = std::tanh(u);
        const double du = kC * (1.0 + 3.0 * kA * v * v);
        return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
      });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
      [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

// --- reductions ------------------------------------------------------------

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  const bool rec = detail::should_record({&x});
  return detail::make_result({1}, {s}, rec, [x](const detail::TensorImpl& o) {
    auto& gx = detail::grad_buffer(x);
    for (double& g : gx) g += o.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  return mul_scalar(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor sum_axis(const Tensor& x, std::size_t axis, bool keepdim) {
  const Shape& s = x.shape();
  if (axis >= s.size()) {
    throw DimensionError("sum_axis: axis " + std::to_string(axis) +
                         " out of range for " + shape_str(s));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  const auto xv = x.values();
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < len; ++k) {
      const double* src = &xv[(o * len + k) * inner];
      double* dst = &out[o * inner];
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  Shape os;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) os.push_back(s[i]);
    else if (keepdim) os.push_back(1);
  }
  if (os.empty()) os.push_back(1);
  const bool rec = detail::should_record({&x});
  return detail::make_result(
      std::move(os), std::move(out), rec,
      [x, outer, inner, len](const detail::TensorImpl& o) {
        auto& gx = detail::grad_buffer(x);
        for (std::size_t a = 0; a < outer; ++a) {
          for (std::size_t k = 0; k < len; ++k) {
            double* dst = &gx[(a * len + k) * inner];
            const double* src = &o.grad[a * inner];
            for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
          }
        }
      });
}

Tensor mean_axis(const Tensor& x, std::size_t axis, bool keepdim) {
  const double len = static_cast<double>(x.dim(axis));
  return mul_scalar(sum_axis(x, axis, keepdim), 1.0 / len);
}

Tensor weighted_sum(const std::vector<Tensor>& terms,
                    const std::vector<double>& weights) {
  if (terms.size() != weights.size() || terms.empty()) {
    throw ContractError("weighted_sum: terms and weights differ in length");
  }
  long double acc = 0.0L;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].numel() != 1) {
      throw DimensionError("weighted_sum: term " + std::to_string(i) +
                           " has shape " + shape_str(terms[i].shape()));
    }
    acc += static_cast<long double>(weights[i]) *
           static_cast<long double>(terms[i].item());
  }
  const bool rec = detail::should_record(terms);
  return detail::make_result(
      {1}, {static_cast<double>(acc)}, rec,
      [terms, weights](const detail::TensorImpl& o) {
        for (std::size_t i = 0; i < terms.size(); ++i) {
          if (terms[i].requires_grad()) {
            detail::grad_buffer(terms[i])[0] += weights[i] * o.grad[0];
          }
        }
      });
}

}  // namespace hgi
