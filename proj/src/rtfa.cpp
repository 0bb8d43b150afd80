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

#include "hgi/rtfa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "hgi/error.hpp"

namespace hgi::rtfa {

Tensor partition_regions(const Tensor& f, std::size_t s) {
  if (f.rank() != 4) {
    throw DimensionError("partition_regions: expected B×C×H×W, got " +
                         shape_str(f.shape()));
  }
  const std::size_t b = f.dim(0), h = f.dim(2), w = f.dim(3);
  if (s == 0 || h % s != 0 || w % s != 0) {
    throw DimensionError("partition_regions: grid " + std::to_string(s) +
                         " does not divide " + std::to_string(h) + "×" +
                         std::to_string(w));
  }
  const std::size_t wh = h / s, ww = w / s, m = wh * ww;
  auto hwc = permute(f, {0, 2, 3, 1});
  std::vector<std::size_t> rows;
  rows.reserve(b * h * w);
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t ry = 0; ry < s; ++ry)
      for (std::size_t rx = 0; rx < s; ++rx)
        for (std::size_t ty = 0; ty < wh; ++ty)
          for (std::size_t tx = 0; tx < ww; ++tx) {
            const std::size_t y = ry * wh + ty, x = rx * ww + tx;
            rows.push_back((bi * h + y) * w + x);
          }
  return gather_rows(hwc, rows, {b, s * s, m});
}

Tensor merge_regions(const Tensor& t, std::size_t s, std::size_t h,
                     std::size_t w) {
  if (t.rank() != 4 || s == 0 || h % s != 0 || w % s != 0 ||
      t.dim(1) != s * s || t.dim(2) != (h / s) * (w / s)) {
    throw DimensionError("merge_regions: " + shape_str(t.shape()) +
                         " is not a " + std::to_string(s) + "-grid of " +
                         std::to_string(h) + "×" + std::to_string(w));
  }
  const std::size_t b = t.dim(0), wh = h / s, ww = w / s, m = wh * ww;
  std::vector<std::size_t> rows;
  rows.reserve(b * h * w);
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t r = (y / wh) * s + x / ww;
        const std::size_t tok = (y % wh) * ww + x % ww;
        rows.push_back((bi * s * s + r) * m + tok);
      }
  return permute(gather_rows(t, rows, {b, h, w}), {0, 3, 1, 2});
}

RegionTokenSet qkv_project(const Tensor& tokens, std::size_t s,
                           const nn::Linear& wq, const nn::Linear& wk,
                           const nn::Linear& wv) {
  if (tokens.rank() != 4 || tokens.dim(3) != wq.weight.dim(0)) {
    throw DimensionError("qkv_project: tokens " + shape_str(tokens.shape()) +
                         " do not match projection " +
                         shape_str(wq.weight.shape()));
  }
  RegionTokenSet set;
  set.tokens = tokens;
  set.s = s;
  set.q = wq(tokens);
  set.k = wk(tokens);
  set.v = wv(tokens);
  set.q_pool = mean_axis(set.q, 2);
  set.k_pool = mean_axis(set.k, 2);
  set.v_pool = mean_axis(set.v, 2);
  return set;
}

std::vector<double> region_affinity(const Tensor& q_pool, const Tensor& k_pool,
                                    std::size_t batch) {
  const std::size_t n = q_pool.dim(1), c = q_pool.dim(2);
  const double* q = q_pool.values().data() + batch * n * c;
  const double* k = k_pool.values().data() + batch * n * c;
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t x = 0; x < c; ++x) acc += q[i * c + x] * k[j * c + x];
      a[i * n + j] = acc;
    }
  return a;
}

std::size_t default_knn(std::size_t n) {
  if (n < 2) return 0;
  return std::min(std::max<std::size_t>(2, n / 4), n - 1);
}

namespace {

std::vector<double> squared_distances(const std::vector<double>& pts,
                                      std::size_t n, std::size_t d) {
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) {
      double acc = 0.0;
      for (std::size_t x = 0; x < d; ++x) {
        const double diff = pts[p * d + x] - pts[q * d + x];
        acc += diff * diff;
      }
      dist[p * n + q] = acc;
      dist[q * n + p] = acc;
    }
  return dist;
}

void check_points(const std::vector<double>& pts, std::size_t n,
                  std::size_t d) {
  if (pts.size() != n * d) {
    throw DimensionError("dpc: " + std::to_string(pts.size()) +
                         " values for " + std::to_string(n) + "×" +
                         std::to_string(d) + " points");
  }
}

}  // namespace

std::vector<double> dpc_density(const std::vector<double>& points,
                                std::size_t n, std::size_t d,
                                std::size_t knn) {
  check_points(points, n, d);
  if (knn < 1 || knn + 1 > n) {
    throw ContractError("dpc_density: knn " + std::to_string(knn) +
                        " outside [1, " + std::to_string(n > 0 ? n - 1 : 0) +
                        "]");
  }
  const auto dist = squared_distances(points, n, d);
  std::vector<double> rho(n), buf(n - 1);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t j = 0;
    for (std::size_t q = 0; q < n; ++q)
      if (q != p) buf[j++] = dist[p * n + q];
    std::partial_sort(buf.begin(), buf.begin() + static_cast<long>(knn),
                      buf.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < knn; ++i) acc += buf[i];
    rho[p] = std::exp(-acc / static_cast<double>(knn));
  }
  return rho;
}

std::vector<double> dpc_distance_indicator(const std::vector<double>& points,
                                           std::size_t n, std::size_t d,
                                           const std::vector<double>& rho) {
  check_points(points, n, d);
  if (rho.size() != n) {
    throw DimensionError("dpc_distance_indicator: " +
                         std::to_string(rho.size()) + " densities for " +
                         std::to_string(n) + " points");
  }
  const auto dist = squared_distances(points, n, d);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rho[a] > rho[b] || (rho[a] == rho[b] && a < b);
  });
  std::vector<double> delta(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t p = order[r];
    if (r == 0) {
      double mx = 0.0;
      for (std::size_t q = 0; q < n; ++q) mx = std::max(mx, dist[p * n + q]);
      delta[p] = mx;
    } else {
      double mn = dist[p * n + order[0]];
      for (std::size_t i = 1; i < r; ++i) mn = std::min(mn, dist[p * n + order[i]]);
      delta[p] = mn;
    }
  }
  return delta;
}

std::vector<std::size_t> select_centers(const std::vector<double>& rho,
                                        const std::vector<double>& delta,
                                        std::size_t k) {
  if (k == 0) throw ContractError("select_centers: k must be at least 1");
  if (rho.size() != delta.size()) {
    throw DimensionError("select_centers: ρ and δ lengths differ");
  }
  const std::size_t n = rho.size();
  if (k > n) {
    spdlog::debug("select_centers: k={} clamped to {}", k, n);
    k = n;
  }
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) score[i] = rho[i] * delta[i];
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return score[a] > score[b];
  });
  idx.resize(k);
  return idx;
}

ClusterStats cluster(const std::vector<double>& affinity, std::size_t n,
                     std::size_t k, std::size_t knn) {
  ClusterStats st;
  st.affinity = affinity;
  if (n == 1) {
    st.rho = {1.0};
    st.delta = {0.0};
    st.score = {0.0};
    st.centers = {0};
    return st;
  }
  st.knn = knn == 0 ? default_knn(n) : knn;
  st.rho = dpc_density(affinity, n, n, st.knn);
  st.delta = dpc_distance_indicator(affinity, n, n, st.rho);
  st.score.resize(n);
  for (std::size_t i = 0; i < n; ++i) st.score[i] = st.rho[i] * st.delta[i];
  st.centers = select_centers(st.rho, st.delta, k);
  return st;
}

Tensor focused_attention(const RegionTokenSet& set,
                         const std::vector<std::vector<std::size_t>>& centers,
                         std::size_t heads, Tensor* weights) {
  const Tensor& q = set.q;
  const std::size_t b = q.dim(0), r = q.dim(1), m = q.dim(2), c = q.dim(3);
  if (heads == 0 || c % heads != 0) {
    throw ConfigError("focused_attention: " + std::to_string(heads) +
                      " heads do not divide " + std::to_string(c) +
                      " channels");
  }
  if (!centers.empty() && centers.size() != b) {
    throw ContractError("focused_attention: center lists for " +
                        std::to_string(centers.size()) + " of " +
                        std::to_string(b) + " batch elements");
  }
  const std::size_t kk = centers.empty() ? 0 : centers[0].size();
  Tensor keys = set.k, vals = set.v;
  if (kk > 0) {
    std::vector<std::size_t> rows;
    rows.reserve(b * r * kk);
    for (std::size_t bi = 0; bi < b; ++bi) {
      if (centers[bi].size() != kk) {
        throw ContractError("focused_attention: unequal center counts");
      }
      for (std::size_t ri = 0; ri < r; ++ri)
        for (std::size_t ci : centers[bi]) {
          if (ci >= r) throw ContractError("focused_attention: center out of range");
          rows.push_back(bi * r + ci);
        }
    }
    keys = concat({keys, gather_rows(set.k_pool, rows, {b, r, kk})}, 2);
    vals = concat({vals, gather_rows(set.v_pool, rows, {b, r, kk})}, 2);
  }
  auto out = nn::multi_head_attention(reshape(q, {b * r, m, c}),
                                      reshape(keys, {b * r, m + kk, c}),
                                      reshape(vals, {b * r, m + kk, c}), heads,
                                      weights);
  return reshape(out, {b, r, m, c});
}

Block::Block(nn::ParamFactory f, const BlockOptions& opt)
    : opt_(opt),
      norm1_(f.scope("norm1"), opt.channels),
      norm2_(f.scope("norm2"), opt.channels),
      q_(f.scope("attn.q"), opt.channels, opt.channels, false),
      k_(f.scope("attn.k"), opt.channels, opt.channels, false),
      v_(f.scope("attn.v"), opt.channels, opt.channels, false),
      proj_(f.scope("attn.proj"), opt.channels, opt.channels),
      ffn_(f.scope("mlp"), opt.channels, opt.channels * opt.mlp_ratio) {
  if (opt.heads == 0 || opt.channels % opt.heads != 0) {
    throw ConfigError("rtfa block: " + std::to_string(opt.heads) +
                      " heads do not divide " + std::to_string(opt.channels) +
                      " channels");
  }
  if (opt.grid == 0) throw ConfigError("rtfa block: region grid must be positive");
  if (opt.focused && opt.k == 0) throw ConfigError("rtfa block: k must be at least 1");
}

std::size_t Block::effective_k() const {
  return opt_.focused ? std::min(opt_.k, opt_.grid * opt_.grid) : 0;
}

Tensor Block::operator()(const Tensor& x, BlockTrace* trace) const {
  if (x.rank() != 4 || x.dim(1) != opt_.channels) {
    throw DimensionError("rtfa block: expected B×" +
                         std::to_string(opt_.channels) + "×H×W, got " +
                         shape_str(x.shape()));
  }
  const std::size_t b = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t s = opt_.focused ? opt_.grid : 1;
  auto t = partition_regions(x, s);
  auto set = qkv_project(norm1_(t), s, q_, k_, v_);
  std::vector<std::vector<std::size_t>> centers;
  if (opt_.focused) {
    centers.resize(b);
    for (std::size_t bi = 0; bi < b; ++bi) {
      auto st = cluster(region_affinity(set.q_pool, set.k_pool, bi), s * s,
                        effective_k(), opt_.knn);
      centers[bi] = st.centers;
      if (trace) trace->clusters.push_back(std::move(st));
    }
  }
  Tensor attn;
  auto a = focused_attention(set, centers, opt_.heads, trace ? &attn : nullptr);
  if (trace) trace->attention.push_back(attn);
  auto u = add(t, proj_(a));
  u = add(u, ffn_(norm2_(u)));
  return merge_regions(u, s, h, w);
}

}  // namespace hgi::rtfa
