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

#include <algorithm>
#include <cmath>

#include "hgi/error.hpp"
#include "gemm.hpp"
#include "hgi/tensor.hpp"

namespace hgi {

namespace gemm {

void nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
        const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void nt(std::size_t m, std::size_t n, std::size_t k, const double* g,
        const double* b, double* c) {
  // c[m×k] += g[m×n]·b[k×n]ᵀ
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += gi[j] * bp[j];
      ci[p] += s;
    }
  }
}

void tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
        const double* g, double* c) {
  // c[k×n] += a[m×k]ᵀ·g[m×n]
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * gi[j];
    }
  }
}

}  // namespace gemm

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " +
                         shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  gemm::nn(m, k, n, a.values().data(), b.values().data(), out.data());
  const bool rec = detail::should_record({&a, &b});
  return detail::make_result(
      {m, n}, std::move(out), rec, [a, b, m, k, n](const detail::TensorImpl& o) {
        if (a.requires_grad()) {
          gemm::nt(m, n, k, o.grad.data(), b.values().data(),
                   detail::grad_buffer(a).data());
        }
        if (b.requires_grad()) {
          gemm::tn(m, k, n, a.values().data(), o.grad.data(),
                   detail::grad_buffer(b).data());
        }
      });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) ||
      a.dim(2) != b.dim(1)) {
    throw DimensionError("bmm: incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2),
                    n = b.dim(2);
  std::vector<double> out(batch * m * n, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t t = 0; t < batch; ++t) {
    gemm::nn(m, k, n, av + t * m * k, bv + t * k * n, out.data() + t * m * n);
  }
  const bool rec = detail::should_record({&a, &b});
  return detail::make_result(
      {batch, m, n}, std::move(out), rec,
      [a, b, batch, m, k, n](const detail::TensorImpl& o) {
        const double* av = a.values().data();
        const double* bv = b.values().data();
        if (a.requires_grad()) {
          double* ga = detail::grad_buffer(a).data();
          for (std::size_t t = 0; t < batch; ++t) {
            gemm::nt(m, n, k, o.grad.data() + t * m * n, bv + t * k * n,
                     ga + t * m * k);
          }
        }
        if (b.requires_grad()) {
          double* gb = detail::grad_buffer(b).data();
          for (std::size_t t = 0; t < batch; ++t) {
            gemm::tn(m, k, n, av + t * m * k, o.grad.data() + t * m * n,
                     gb + t * k * n);
          }
        }
      });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (w.rank() != 2 || x.rank() == 0 || x.shape().back() != w.dim(0)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) +
                         " does not match weight " + shape_str(w.shape()));
  }
  const std::size_t in = w.dim(0), out_f = w.dim(1);
  const std::size_t rows = x.numel() / in;
  if (bias.defined() && bias.numel() != out_f) {
    throw DimensionError("linear: bias " + shape_str(bias.shape()) +
                         " does not match weight " + shape_str(w.shape()));
  }
  std::vector<double> out(rows * out_f, 0.0);
  if (bias.defined()) {
    const auto bv = bias.values();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(bv.begin(), bv.end(), out.begin() + r * out_f);
    }
  }
  gemm::nn(rows, in, out_f, x.values().data(), w.values().data(), out.data());
  Shape os = x.shape();
  os.back() = out_f;
  const bool rec = detail::should_record({&x, &w, &bias});
  return detail::make_result(
      std::move(os), std::move(out), rec,
      [x, w, bias, rows, in, out_f](const detail::TensorImpl& o) {
        if (x.requires_grad()) {
          gemm::nt(rows, out_f, in, o.grad.data(), w.values().data(),
                   detail::grad_buffer(x).data());
        }
        if (w.requires_grad()) {
          gemm::tn(rows, in, out_f, x.values().data(), o.grad.data(),
                   detail::grad_buffer(w).data());
        }
        if (bias.defined() && bias.requires_grad()) {
          auto& gb = detail::grad_buffer(bias);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < out_f; ++j) {
              gb[j] += o.grad[r * out_f + j];
            }
          }
        }
      });
}

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() == 0) throw DimensionError("softmax_rows on rank-0 tensor");
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.numel() / n;
  const auto xv = x.values();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = &xv[r * n];
    double* dst = &out[r * n];
    const double mx = *std::max_element(src, src + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dst[j] = std::exp(src[j] - mx);
      s += dst[j];
    }
    for (std::size_t j = 0; j < n; ++j) dst[j] /= s;
  }
  const bool rec = detail::should_record({&x});
  return detail::make_result(x.shape(), std::move(out), rec,
                             [x, rows, n](const detail::TensorImpl& o) {
                               auto& gx = detail::grad_buffer(x);
                               for (std::size_t r = 0; r < rows; ++r) {
                                 const double* y = &o.data[r * n];
                                 const double* g = &o.grad[r * n];
                                 double dot = 0.0;
                                 for (std::size_t j = 0; j < n; ++j) {
                                   dot += g[j] * y[j];
                                 }
                                 for (std::size_t j = 0; j < n; ++j) {
                                   gx[r * n + j] += y[j] * (g[j] - dot);
                                 }
                               }
                             });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm on rank-0 tensor");
  const std::size_t n = x.shape().back();
  if (gamma.numel() != n || beta.numel() != n) {
    throw DimensionError("layer_norm: affine parameters do not match " +
                         shape_str(x.shape()));
  }
  const std::size_t rows = x.numel() / n;
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = &xv[r * n];
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += src[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (src[j] - mu) * (src[j] - mu);
    var /= static_cast<double>(n);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (src[j] - mu) * rstd[r];
      xhat[r * n + j] = h;
      out[r * n + j] = h * gv[j] + bv[j];
    }
  }
  const bool rec = detail::should_record({&x, &gamma, &beta});
  return detail::make_result(
      x.shape(), std::move(out), rec,
      [x, gamma, beta, rows, n, xhat = std::move(xhat),
       rstd = std::move(rstd)](const detail::TensorImpl& o) {
        const auto gv = gamma.values();
        if (x.requires_grad()) {
          auto& gx = detail::grad_buffer(x);
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t r = 0; r < rows; ++r) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double dh = o.grad[r * n + j] * gv[j];
              m1 += dh;
              m2 += dh * xhat[r * n + j];
            }
            m1 *= inv_n;
            m2 *= inv_n;
            for (std::size_t j = 0; j < n; ++j) {
              const double dh = o.grad[r * n + j] * gv[j];
              gx[r * n + j] += rstd[r] * (dh - m1 - xhat[r * n + j] * m2);
            }
          }
        }
        if (gamma.requires_grad()) {
          auto& gg = detail::grad_buffer(gamma);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < n; ++j) {
              gg[j] += o.grad[r * n + j] * xhat[r * n + j];
            }
          }
        }
        if (beta.requires_grad()) {
          auto& gb = detail::grad_buffer(beta);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < n; ++j) gb[j] += o.grad[r * n + j];
          }
        }
      });
}

}  // namespace hgi
