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

#include "gemm.hpp"
#include "hgi/error.hpp"
#include "hgi/tensor.hpp"

namespace hgi {
namespace {

void require_nchw(const Tensor& x, const char* op) {
  if (x.rank() != 4) {
    throw DimensionError(std::string(op) + " expects B×C×H×W, got " +
                         shape_str(x.shape()));
  }
}

struct ConvGeom {
  std::size_t c, h, w, k, stride, pad, ho, wo;
};

// cols[(c·k + ky)·k + kx][oy·wo + ox]
void im2col(const double* img, const ConvGeom& g, double* cols) {
  const std::size_t plane = g.ho * g.wo;
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        double* row = cols + ((c * g.k + ky) * g.k + kx) * plane;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) -
                          static_cast<long>(g.pad);
          double* dst = row + oy * g.wo;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill_n(dst, g.wo, 0.0);
            continue;
          }
          const double* src = img + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) -
                            static_cast<long>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w))
                          ? 0.0
                          : src[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeom& g, double* img) {
  const std::size_t plane = g.ho * g.wo;
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const double* row = cols + ((c * g.k + ky) * g.k + kx) * plane;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) -
                          static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          double* dst = img + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const double* src = row + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) -
                            static_cast<long>(g.pad);
            if (ix >= 0 && ix < static_cast<long>(g.w)) {
              dst[static_cast<std::size_t>(ix)] += src[ox];
            }
          }
        }
      }
    }
  }
}

// out[i] = x[src[i]]; backward scatters.
Tensor index_gather(const Tensor& x, std::vector<std::size_t> src,
                    Shape out_shape) {
  const auto xv = x.values();
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = xv[src[i]];
  const bool rec = detail::should_record({&x});
  return detail::make_result(std::move(out_shape), std::move(out), rec,
                             [x, src = std::move(src)](
                                 const detail::TensorImpl& o) {
                               auto& gx = detail::grad_buffer(x);
                               for (std::size_t i = 0; i < src.size(); ++i) {
                                 gx[src[i]] += o.grad[i];
                               }
                             });
}

struct Tap {
  std::size_t i0, i1;
  double w1;  // weight of i1; i0 gets 1 − w1
};

std::vector<Tap> resize_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = Tap{i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t padding) {
  require_nchw(x, "conv2d");
  if (kernel.rank() != 4 || kernel.dim(1) != x.dim(1) ||
      kernel.dim(2) != kernel.dim(3)) {
    throw DimensionError("conv2d: kernel " + shape_str(kernel.shape()) +
                         " does not fit input " + shape_str(x.shape()));
  }
  const std::size_t k = kernel.dim(2);
  if (k % 2 == 0) {
    throw ContractError("conv2d: kernel size must be odd, got " +
                        std::to_string(k));
  }
  if (stride == 0) throw ContractError("conv2d: stride must be positive");
  const std::size_t batch = x.dim(0), c_in = x.dim(1), h = x.dim(2),
                    w = x.dim(3), c_out = kernel.dim(0);
  if (h + 2 * padding < k || w + 2 * padding < k) {
    throw DimensionError("conv2d: kernel " + shape_str(kernel.shape()) +
                         " larger than padded input " + shape_str(x.shape()) +
                         " (padding " + std::to_string(padding) + ")");
  }
  if (bias.defined() && bias.numel() != c_out) {
    throw DimensionError("conv2d: bias " + shape_str(bias.shape()) +
                         " does not match " + std::to_string(c_out) +
                         " output channels");
  }
  const ConvGeom g{c_in, h, w, k, stride, padding,
                   (h + 2 * padding - k) / stride + 1,
                   (w + 2 * padding - k) / stride + 1};
  const std::size_t plane = g.ho * g.wo;
  const std::size_t ckk = c_in * k * k;
  std::vector<double> out(batch * c_out * plane, 0.0);
  std::vector<double> cols(ckk * plane);
  const double* xv = x.values().data();
  const double* kv = kernel.values().data();
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(xv + b * c_in * h * w, g, cols.data());
    double* ob = out.data() + b * c_out * plane;
    if (bias.defined()) {
      const auto bv = bias.values();
      for (std::size_t co = 0; co < c_out; ++co) {
        std::fill_n(ob + co * plane, plane, bv[co]);
      }
    }
    gemm::nn(c_out, ckk, plane, kv, cols.data(), ob);
  }
  const bool rec = detail::should_record({&x, &kernel, &bias});
  return detail::make_result(
      {batch, c_out, g.ho, g.wo}, std::move(out), rec,
      [x, kernel, bias, g, batch, c_out, ckk, plane](
          const detail::TensorImpl& o) {
        std::vector<double> cols(ckk * plane);
        std::vector<double> dcols;
        const double* xv = x.values().data();
        const double* kv = kernel.values().data();
        const std::size_t in_plane = g.c * g.h * g.w;
        double* gk = kernel.requires_grad()
                         ? detail::grad_buffer(kernel).data()
                         : nullptr;
        double* gx = x.requires_grad() ? detail::grad_buffer(x).data()
                                       : nullptr;
        if (gx) dcols.resize(ckk * plane);
        for (std::size_t b = 0; b < batch; ++b) {
          const double* gb = o.grad.data() + b * c_out * plane;
          if (gk) {
            im2col(xv + b * in_plane, g, cols.data());
            gemm::nt(c_out, plane, ckk, gb, cols.data(), gk);
          }
          if (gx) {
            std::fill(dcols.begin(), dcols.end(), 0.0);
            gemm::tn(c_out, ckk, plane, kv, gb, dcols.data());
            col2im(dcols.data(), g, gx + b * in_plane);
          }
        }
        if (bias.defined() && bias.requires_grad()) {
          auto& gbias = detail::grad_buffer(bias);
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t co = 0; co < c_out; ++co) {
              const double* src = o.grad.data() + (b * c_out + co) * plane;
              double s = 0.0;
              for (std::size_t i = 0; i < plane; ++i) s += src[i];
              gbias[co] += s;
            }
          }
        }
      });
}

Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  require_nchw(x, "bilinear_resize");
  if (out_h == 0 || out_w == 0) {
    throw ContractError("bilinear_resize: target extents must be positive");
  }
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h == out_h && w == out_w) {
    return reshape(x, x.shape());
  }
  auto ty = resize_taps(h, out_h);
  auto tx = resize_taps(w, out_w);
  const auto xv = x.values();
  std::vector<double> out(planes * out_h * out_w);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = &xv[p * h * w];
    double* dst = &out[p * out_h * out_w];
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const Tap& a = ty[oy];
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const Tap& b = tx[ox];
        const double top = src[a.i0 * w + b.i0] * (1.0 - b.w1) +
                           src[a.i0 * w + b.i1] * b.w1;
        const double bot = src[a.i1 * w + b.i0] * (1.0 - b.w1) +
                           src[a.i1 * w + b.i1] * b.w1;
        dst[oy * out_w + ox] = top * (1.0 - a.w1) + bot * a.w1;
      }
    }
  }
  const bool rec = detail::should_record({&x});
  return detail::make_result(
      {x.dim(0), x.dim(1), out_h, out_w}, std::move(out), rec,
      [x, ty = std::move(ty), tx = std::move(tx), planes, h, w, out_h,
       out_w](const detail::TensorImpl& o) {
        auto& gx = detail::grad_buffer(x);
        for (std::size_t p = 0; p < planes; ++p) {
          double* dst = &gx[p * h * w];
          const double* g = &o.grad[p * out_h * out_w];
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const Tap& a = ty[oy];
            for (std::size_t ox = 0; ox < out_w; ++ox) {
              const Tap& b = tx[ox];
              const double v = g[oy * out_w + ox];
              dst[a.i0 * w + b.i0] += v * (1.0 - a.w1) * (1.0 - b.w1);
              dst[a.i0 * w + b.i1] += v * (1.0 - a.w1) * b.w1;
              dst[a.i1 * w + b.i0] += v * a.w1 * (1.0 - b.w1);
              dst[a.i1 * w + b.i1] += v * a.w1 * b.w1;
            }
          }
        }
      });
}

Tensor pixel_shuffle(const Tensor& x, std::size_t r) {
  require_nchw(x, "pixel_shuffle");
  if (r == 0 || x.dim(1) % (r * r) != 0) {
    throw DimensionError("pixel_shuffle: channels " + std::to_string(x.dim(1)) +
                         " not divisible by r²=" + std::to_string(r * r));
  }
  const std::size_t b = x.dim(0), cr = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t c = cr / (r * r);
  const std::size_t oh = h * r, ow = w * r;
  std::vector<std::size_t> src(x.numel());
  std::size_t o = 0;
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const std::size_t i = y % r, j = xx % r;
          const std::size_t in_c = ci * r * r + i * r + j;
          src[o++] = ((bi * cr + in_c) * h + y / r) * w + xx / r;
        }
      }
    }
  }
  return index_gather(x, std::move(src), {b, c, oh, ow});
}

Tensor pixel_unshuffle(const Tensor& x, std::size_t r) {
  require_nchw(x, "pixel_unshuffle");
  if (r == 0 || x.dim(2) % r != 0 || x.dim(3) % r != 0) {
    throw DimensionError("pixel_unshuffle: extents of " +
                         shape_str(x.shape()) + " not divisible by " +
                         std::to_string(r));
  }
  const std::size_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h / r, ow = w / r, oc = c * r * r;
  std::vector<std::size_t> src(x.numel());
  std::size_t o = 0;
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t co = 0; co < oc; ++co) {
      const std::size_t ci = co / (r * r), i = (co / r) % r, j = co % r;
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t xx = 0; xx < ow; ++xx) {
          src[o++] = ((bi * c + ci) * h + y * r + i) * w + xx * r + j;
        }
      }
    }
  }
  return index_gather(x, std::move(src), {b, oc, oh, ow});
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormState& state, bool training) {
  require_nchw(x, "batch_norm");
  const std::size_t batch = x.dim(0), c = x.dim(1),
                    plane = x.dim(2) * x.dim(3);
  if (gamma.numel() != c || beta.numel() != c ||
      state.running_mean.numel() != c || state.running_var.numel() != c) {
    throw DimensionError("batch_norm: parameters do not match " +
                         std::to_string(c) + " channels");
  }
  const std::size_t count = batch * plane;
  if (training && count < 2) {
    throw ContractError(
        "batch_norm: training mode needs at least two values per channel, "
        "got input " + shape_str(x.shape()));
  }
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<double> mu(c), rstd(c);
  if (training) {
    auto rm = state.running_mean.mutable_values();
    auto rv = state.running_var.mutable_values();
    for (std::size_t ch = 0; ch < c; ++ch) {
      double m = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* src = &xv[(b * c + ch) * plane];
        for (std::size_t i = 0; i < plane; ++i) m += src[i];
      }
      m /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* src = &xv[(b * c + ch) * plane];
        for (std::size_t i = 0; i < plane; ++i) {
          var += (src[i] - m) * (src[i] - m);
        }
      }
      const double unbiased = var / static_cast<double>(count - 1);
      var /= static_cast<double>(count);
      mu[ch] = m;
      rstd[ch] = 1.0 / std::sqrt(var + state.eps);
      rm[ch] = (1.0 - state.momentum) * rm[ch] + state.momentum * m;
      rv[ch] = (1.0 - state.momentum) * rv[ch] + state.momentum * unbiased;
    }
  } else {
    const auto rm = state.running_mean.values();
    const auto rv = state.running_var.values();
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = rm[ch];
      rstd[ch] = 1.0 / std::sqrt(rv[ch] + state.eps);
    }
  }
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (b * c + ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double hval = (xv[base + i] - mu[ch]) * rstd[ch];
        xhat[base + i] = hval;
        out[base + i] = hval * gv[ch] + bv[ch];
      }
    }
  }
  const bool rec = detail::should_record({&x, &gamma, &beta});
  return detail::make_result(
      x.shape(), std::move(out), rec,
      [x, gamma, beta, training, batch, c, plane, count,
       xhat = std::move(xhat), rstd = std::move(rstd)](
          const detail::TensorImpl& o) {
        const auto gv = gamma.values();
        if (gamma.requires_grad() || beta.requires_grad() ||
            x.requires_grad()) {
          std::vector<double> sum_g(c, 0.0), sum_gh(c, 0.0);
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t base = (b * c + ch) * plane;
              for (std::size_t i = 0; i < plane; ++i) {
                sum_g[ch] += o.grad[base + i];
                sum_gh[ch] += o.grad[base + i] * xhat[base + i];
              }
            }
          }
          if (gamma.requires_grad()) {
            auto& gg = detail::grad_buffer(gamma);
            for (std::size_t ch = 0; ch < c; ++ch) gg[ch] += sum_gh[ch];
          }
          if (beta.requires_grad()) {
            auto& gb = detail::grad_buffer(beta);
            for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += sum_g[ch];
          }
          if (x.requires_grad()) {
            auto& gx = detail::grad_buffer(x);
            const double inv = 1.0 / static_cast<double>(count);
            for (std::size_t b = 0; b < batch; ++b) {
              for (std::size_t ch = 0; ch < c; ++ch) {
                const std::size_t base = (b * c + ch) * plane;
                const double scale = gv[ch] * rstd[ch];
                for (std::size_t i = 0; i < plane; ++i) {
                  const double g = o.grad[base + i];
                  gx[base + i] +=
                      training ? scale * (g - sum_g[ch] * inv -
                                          xhat[base + i] * sum_gh[ch] * inv)
                               : scale * g;
                }
              }
            }
          }
        }
      });
}

}  // namespace hgi
