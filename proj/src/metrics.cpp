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

#include "hgi/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "hgi/error.hpp"

namespace hgi::metrics {

namespace {

constexpr int kGaussRadius = 3;
constexpr double kGaussSigma = 5.0;

std::size_t check(MapView pred, MapView gt) {
  const std::size_t n = pred.height * pred.width;
  if (pred.height != gt.height || pred.width != gt.width || n == 0 ||
      pred.data.size() != n || gt.data.size() != n) {
    throw DimensionError("metric: prediction " + std::to_string(pred.height) +
                         "×" + std::to_string(pred.width) +
                         " and ground truth " + std::to_string(gt.height) +
                         "×" + std::to_string(gt.width) + " differ");
  }
  for (double g : gt.data) {
    if (g != 0.0 && g != 1.0) {
      throw ContractError("metric: ground truth must be binary");
    }
  }
  return n;
}

std::size_t count_fg(MapView gt) {
  return static_cast<std::size_t>(
      std::count(gt.data.begin(), gt.data.end(), 1.0));
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// 2x / (x² + 1 + σ) over the selected values.
double object_similarity(const std::vector<double>& vals) {
  const double n = static_cast<double>(vals.size());
  double sum = 0.0;
  for (double v : vals) sum += v;
  const double x = sum / n;
  double sd = 0.0;
  if (vals.size() > 1) {
    double ss = 0.0;
    for (double v : vals) ss += (v - x) * (v - x);
    sd = std::sqrt(ss / (n - 1.0));
  }
  return 2.0 * x / (x * x + 1.0 + sd);
}

double block_ssim(MapView pred, MapView gt, std::size_t y0, std::size_t y1,
                  std::size_t x0, std::size_t x1) {
  const std::size_t w = pred.width;
  const double n = static_cast<double>((y1 - y0) * (x1 - x0));
  double sp = 0.0, sg = 0.0;
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) {
      sp += pred.data[y * w + x];
      sg += gt.data[y * w + x];
    }
  const double mx = sp / n, my = sg / n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  if (n > 1.0) {
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) {
        const double dp = pred.data[y * w + x] - mx;
        const double dg = gt.data[y * w + x] - my;
        vx += dp * dp;
        vy += dg * dg;
        cxy += dp * dg;
      }
    vx /= n - 1.0;
    vy /= n - 1.0;
    cxy /= n - 1.0;
  }
  const double alpha = 4.0 * mx * my * cxy;
  const double beta = (mx * mx + my * my) * (vx + vy);
  if (alpha != 0.0) return alpha / beta;
  return beta == 0.0 ? 1.0 : 0.0;
}

}  // namespace

double mae(MapView pred, MapView gt) {
  const std::size_t n = check(pred, gt);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(pred.data[i] - gt.data[i]);
  return s / static_cast<double>(n);
}

double s_measure(MapView pred, MapView gt, double alpha) {
  const std::size_t n = check(pred, gt);
  const std::size_t nfg = count_fg(gt);
  if (nfg == 0) return 1.0 - mean_of(pred.data);
  if (nfg == n) return mean_of(pred.data);

  std::vector<double> fg, bg;
  fg.reserve(nfg);
  bg.reserve(n - nfg);
  double sy = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gt.data[i] == 1.0) {
      fg.push_back(pred.data[i]);
      sy += static_cast<double>(i / gt.width);
      sx += static_cast<double>(i % gt.width);
    } else {
      bg.push_back(1.0 - pred.data[i]);
    }
  }
  const double dn = static_cast<double>(n);
  const double object =
      (static_cast<double>(nfg) * object_similarity(fg) +
       static_cast<double>(n - nfg) * object_similarity(bg)) /
      dn;

  // Split point one past the rounded (half-to-even) centroid.
  const std::size_t h = gt.height, w = gt.width;
  const auto cy = static_cast<std::size_t>(std::nearbyint(sy / static_cast<double>(nfg)));
  const auto cx = static_cast<std::size_t>(std::nearbyint(sx / static_cast<double>(nfg)));
  const std::size_t ys = std::min(cy + 1, h), xs = std::min(cx + 1, w);
  const std::array<std::array<std::size_t, 4>, 4> blocks{{
      {0, ys, 0, xs}, {0, ys, xs, w}, {ys, h, 0, xs}, {ys, h, xs, w}}};
  double region = 0.0;
  for (const auto& b : blocks) {
    const std::size_t area = (b[1] - b[0]) * (b[3] - b[2]);
    if (area == 0) continue;
    region += static_cast<double>(area) * block_ssim(pred, gt, b[0], b[1], b[2], b[3]);
  }
  region /= dn;
  return std::max(0.0, alpha * object + (1.0 - alpha) * region);
}

double mean_e_measure(MapView pred, MapView gt) {
  const std::size_t n = check(pred, gt);
  const std::size_t nfg = count_fg(gt);
  constexpr std::size_t T = kEThresholds;
  // levels[i] = number of thresholds (j + 0.5)/T that pixel i reaches.
  std::array<std::size_t, T + 1> hist_fg{}, hist_bg{};
  for (std::size_t i = 0; i < n; ++i) {
    const double u = pred.data[i] * static_cast<double>(T) - 0.5;
    std::size_t level = 0;
    if (u >= 0.0) level = std::min<std::size_t>(T, static_cast<std::size_t>(std::floor(u)) + 1);
    (gt.data[i] == 1.0 ? hist_fg : hist_bg)[level]++;
  }
  // Thresholds are visited from the highest; pixels with level > j are
  // predicted foreground at threshold j.
  const double dn = static_cast<double>(n);
  const double mg = static_cast<double>(nfg) / dn;
  double total = 0.0;
  std::size_t fg_fg = 0, fg_bg = 0;
  for (std::size_t j = T; j-- > 0;) {
    fg_fg += hist_fg[j + 1];
    fg_bg += hist_bg[j + 1];
    const std::size_t pred_fg = fg_fg + fg_bg;
    double enhanced;
    if (nfg == 0) {
      enhanced = static_cast<double>(n - pred_fg);
    } else if (nfg == n) {
      enhanced = static_cast<double>(pred_fg);
    } else {
      const double mp = static_cast<double>(pred_fg) / dn;
      const std::size_t bg_fg = nfg - fg_fg;
      const std::size_t bg_bg = n - pred_fg - bg_fg;
      const std::array<std::size_t, 4> parts{fg_fg, fg_bg, bg_fg, bg_bg};
      const std::array<double, 4> a{1.0 - mp, 1.0 - mp, -mp, -mp};
      const std::array<double, 4> b{1.0 - mg, -mg, 1.0 - mg, -mg};
      enhanced = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        if (parts[k] == 0) continue;
        const double align = 2.0 * (a[k] * b[k]) / (a[k] * a[k] + b[k] * b[k]);
        enhanced += (align + 1.0) * (align + 1.0) / 4.0 * static_cast<double>(parts[k]);
      }
    }
    total += enhanced / dn;
  }
  return total / static_cast<double>(T);
}

std::vector<double> gaussian_kernel() {
  const int r = kGaussRadius, side = 2 * r + 1;
  std::vector<double> k(static_cast<std::size_t>(side * side));
  double mx = 0.0;
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x) {
      const double v = std::exp(-(x * x + y * y) / (2.0 * kGaussSigma * kGaussSigma));
      k[static_cast<std::size_t>((y + r) * side + x + r)] = v;
      mx = std::max(mx, v);
    }
  double s = 0.0;
  for (double& v : k) {
    if (v < std::numeric_limits<double>::epsilon() * mx) v = 0.0;
    s += v;
  }
  for (double& v : k) v /= s;
  return k;
}

double weighted_f_measure(MapView pred, MapView gt, double beta2) {
  const std::size_t n = check(pred, gt);
  const std::size_t nfg = count_fg(gt);
  if (nfg == 0) {
    return *std::max_element(pred.data.begin(), pred.data.end()) == 0.0 ? 1.0 : 0.0;
  }
  const std::size_t h = gt.height, w = gt.width;
  std::vector<std::size_t> fg_list;
  fg_list.reserve(nfg);
  for (std::size_t i = 0; i < n; ++i)
    if (gt.data[i] == 1.0) fg_list.push_back(i);

  std::vector<double> err(n), et(n), dist(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) err[i] = std::fabs(pred.data[i] - gt.data[i]);
  et = err;
  for (std::size_t i = 0; i < n; ++i) {
    if (gt.data[i] == 1.0) continue;
    const long iy = static_cast<long>(i / w), ix = static_cast<long>(i % w);
    long best = std::numeric_limits<long>::max();
    std::size_t arg = 0;
    for (std::size_t f : fg_list) {
      const long dy = static_cast<long>(f / w) - iy, dx = static_cast<long>(f % w) - ix;
      const long d2 = dy * dy + dx * dx;
      if (d2 < best) {
        best = d2;
        arg = f;
      }
    }
    et[i] = err[arg];
    dist[i] = std::sqrt(static_cast<double>(best));
  }

  // Separable Gaussian, zero outside the image.
  std::array<double, 2 * kGaussRadius + 1> g{};
  double gs = 0.0;
  for (int x = -kGaussRadius; x <= kGaussRadius; ++x) {
    g[static_cast<std::size_t>(x + kGaussRadius)] =
        std::exp(-(x * x) / (2.0 * kGaussSigma * kGaussSigma));
    gs += g[static_cast<std::size_t>(x + kGaussRadius)];
  }
  for (double& v : g) v /= gs;
  std::vector<double> tmp(n, 0.0), ea(n, 0.0);
  const long lh = static_cast<long>(h), lw = static_cast<long>(w);
  for (long y = 0; y < lh; ++y)
    for (long x = 0; x < lw; ++x) {
      double acc = 0.0;
      for (long d = -kGaussRadius; d <= kGaussRadius; ++d) {
        const long xx = x + d;
        if (xx >= 0 && xx < lw) acc += g[static_cast<std::size_t>(d + kGaussRadius)] * et[static_cast<std::size_t>(y * lw + xx)];
      }
      tmp[static_cast<std::size_t>(y * lw + x)] = acc;
    }
  for (long y = 0; y < lh; ++y)
    for (long x = 0; x < lw; ++x) {
      double acc = 0.0;
      for (long d = -kGaussRadius; d <= kGaussRadius; ++d) {
        const long yy = y + d;
        if (yy >= 0 && yy < lh) acc += g[static_cast<std::size_t>(d + kGaussRadius)] * tmp[static_cast<std::size_t>(yy * lw + x)];
      }
      ea[static_cast<std::size_t>(y * lw + x)] = acc;
    }

  double ew_fg = 0.0, ew_bg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gt.data[i] == 1.0) {
      ew_fg += ea[i] < err[i] ? ea[i] : err[i];
    } else {
      ew_bg += err[i] * (2.0 - std::exp(std::log(0.5) / 5.0 * dist[i]));
    }
  }
  const double tpw = static_cast<double>(nfg) - ew_fg;
  const double recall = 1.0 - ew_fg / static_cast<double>(nfg);
  const double precision = tpw + ew_bg == 0.0 ? 0.0 : tpw / (tpw + ew_bg);
  const double den = beta2 * precision + recall;
  return den == 0.0 ? 0.0 : (1.0 + beta2) * precision * recall / den;
}

MetricReport evaluate(MapView pred, MapView gt) {
  return {s_measure(pred, gt), weighted_f_measure(pred, gt),
          mean_e_measure(pred, gt), mae(pred, gt)};
}

}  // namespace hgi::metrics
