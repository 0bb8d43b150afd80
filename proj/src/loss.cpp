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

#include "hgi/loss.hpp"

#include <algorithm>
#include <cmath>

#include "hgi/error.hpp"

namespace hgi::loss {

namespace {

void check_map(const Tensor& t, const char* what) {
  if (t.rank() != 4) {
    throw DimensionError(std::string(what) + ": expected B×C×H×W, got " +
                         shape_str(t.shape()));
  }
}

void check_same(const Tensor& p, const Tensor& g, const Tensor& w,
                const char* what) {
  if (p.shape() != g.shape() || p.shape() != w.shape() || p.rank() < 1) {
    throw DimensionError(std::string(what) + ": prediction " +
                         shape_str(p.shape()) + ", mask " +
                         shape_str(g.shape()) + " and weights " +
                         shape_str(w.shape()) + " differ");
  }
}

Tensor per_sample_sum(const Tensor& x) {
  const std::size_t b = x.dim(0);
  return sum_axis(reshape(x, {b, x.numel() / b}), 1);
}

}  // namespace

Tensor pixel_weights(const Tensor& g) {
  check_map(g, "pixel_weights");
  const std::size_t planes = g.dim(0) * g.dim(1), h = g.dim(2), w = g.dim(3);
  const std::size_t r = kWeightWindow / 2;
  const auto& in = g.values();
  std::vector<double> out(in.size());
  // Integral image with a zero first row and column.
  std::vector<double> ii((h + 1) * (w + 1));
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const double* src = in.data() + pl * h * w;
    std::fill(ii.begin(), ii.end(), 0.0);
    for (std::size_t y = 0; y < h; ++y) {
      double row = 0.0;
      for (std::size_t x = 0; x < w; ++x) {
        row += src[y * w + x];
        ii[(y + 1) * (w + 1) + x + 1] = ii[y * (w + 1) + x + 1] + row;
      }
    }
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t y0 = y >= r ? y - r : 0, y1 = std::min(h, y + r + 1);
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t x0 = x >= r ? x - r : 0, x1 = std::min(w, x + r + 1);
        const double s = ii[y1 * (w + 1) + x1] - ii[y0 * (w + 1) + x1] -
                         ii[y1 * (w + 1) + x0] + ii[y0 * (w + 1) + x0];
        const double mean = s / static_cast<double>((y1 - y0) * (x1 - x0));
        out[pl * h * w + y * w + x] =
            1.0 + kWeightGain * std::fabs(mean - src[y * w + x]);
      }
    }
  }
  return Tensor(g.shape(), std::move(out));
}

Tensor nearest_resize(const Tensor& g, std::size_t h, std::size_t w) {
  check_map(g, "nearest_resize");
  const std::size_t planes = g.dim(0) * g.dim(1), ih = g.dim(2), iw = g.dim(3);
  if (h == 0 || w == 0) throw DimensionError("nearest_resize: empty target");
  if (ih == h && iw == w) return g.detach();
  const auto& in = g.values();
  std::vector<double> out(planes * h * w);
  for (std::size_t pl = 0; pl < planes; ++pl)
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t sy = y * ih / h;
      for (std::size_t x = 0; x < w; ++x) {
        out[(pl * h + y) * w + x] = in[(pl * ih + sy) * iw + x * iw / w];
      }
    }
  return Tensor({g.dim(0), g.dim(1), h, w}, std::move(out));
}

Tensor weighted_bce(const Tensor& p, const Tensor& g, const Tensor& w) {
  check_same(p, g, w, "weighted_bce");
  auto pc = clamp(p, kProbClamp, 1.0 - kProbClamp);
  auto ce = neg(add(mul(log(pc), g),
                    mul(log(rsub_scalar(pc, 1.0)), rsub_scalar(g, 1.0))));
  return mean(div(per_sample_sum(mul(ce, w)), per_sample_sum(w)));
}

Tensor weighted_iou(const Tensor& p, const Tensor& g, const Tensor& w) {
  check_same(p, g, w, "weighted_iou");
  auto pg = mul(p, g);
  auto inter = per_sample_sum(mul(pg, w));
  auto uni = per_sample_sum(mul(sub(add(p, g), pg), w));
  const std::size_t b = uni.numel();
  std::vector<double> mask(b), pad(b);
  for (std::size_t i = 0; i < b; ++i) {
    mask[i] = uni.values()[i] == 0.0 ? 0.0 : 1.0;
    pad[i] = 1.0 - mask[i];
  }
  auto ratio = div(inter, add(uni, Tensor({b}, pad)));
  return mean(mul(rsub_scalar(ratio, 1.0), Tensor({b}, mask)));
}

Tensor stage_loss(const Tensor& p, const Tensor& g, double lambda) {
  auto w = pixel_weights(g);
  return weighted_sum({weighted_bce(p, g, w), weighted_iou(p, g, w)},
                      {lambda, 1.0 - lambda});
}

Tensor total_loss(const std::array<Tensor, 3>& refined, const Tensor& g,
                  double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ContractError("total_loss: λ must lie in [0, 1]");
  }
  std::vector<Tensor> terms;
  for (const auto& p : refined) {
    check_map(p, "total_loss");
    terms.push_back(stage_loss(p, nearest_resize(g, p.dim(2), p.dim(3)), lambda));
  }
  return weighted_sum(terms, {kStageWeights.begin(), kStageWeights.end()});
}

}  // namespace hgi::loss
