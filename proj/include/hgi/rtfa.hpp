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

// Region-aware token focusing attention.
//
// A stage map is cut into s×s regions. Pooled region queries and keys give a
// region affinity matrix; density-peaks clustering over its rows picks k
// center regions whose pooled key/value descriptors are appended to every
// region's key/value sequence before windowed attention.

#include <cstddef>
#include <vector>

#include "hgi/nn.hpp"
#include "hgi/tensor.hpp"

namespace hgi::rtfa {

// Region-token layout: B×s²×m×C with m = (H/s)·(W/s). Region r = (ry, rx) in
// row-major order; tokens inside a region in row-major window order.
Tensor partition_regions(const Tensor& f, std::size_t s);
// Inverse of partition_regions, back to B×C×H×W.
Tensor merge_regions(const Tensor& t, std::size_t s, std::size_t h,
                     std::size_t w);

struct RegionTokenSet {
  Tensor tokens;           // B×s²×m×C
  Tensor q, k, v;          // same layout
  Tensor q_pool, k_pool;   // B×s²×C
  Tensor v_pool;           // B×s²×C
  std::size_t s = 1;
};

// Per-token projections followed by mean pooling over each region.
RegionTokenSet qkv_project(const Tensor& tokens, std::size_t s,
                           const nn::Linear& wq, const nn::Linear& wk,
                           const nn::Linear& wv);

// A = pool(Q)·pool(K)ᵀ for one batch element; n×n row-major.
std::vector<double> region_affinity(const Tensor& q_pool, const Tensor& k_pool,
                                    std::size_t batch);

struct ClusterStats {
  std::vector<double> affinity;  // n×n
  std::vector<double> rho;
  std::vector<double> delta;
  std::vector<double> score;
  std::vector<std::size_t> centers;
  std::size_t knn = 0;
};

// Default KNN size for n points.
std::size_t default_knn(std::size_t n);

// Rows of `points` (n×d) are the feature vectors.
std::vector<double> dpc_density(const std::vector<double>& points,
                                std::size_t n, std::size_t d, std::size_t knn);
std::vector<double> dpc_distance_indicator(const std::vector<double>& points,
                                           std::size_t n, std::size_t d,
                                           const std::vector<double>& rho);
// Top-min(k, n) indices by ρ·δ, lower index first on ties.
std::vector<std::size_t> select_centers(const std::vector<double>& rho,
                                        const std::vector<double>& delta,
                                        std::size_t k);

// Full clustering of an affinity matrix. knn == 0 selects default_knn.
// A single region is its own center without clustering.
ClusterStats cluster(const std::vector<double>& affinity, std::size_t n,
                     std::size_t k, std::size_t knn);

// Windowed attention over region keys/values extended by the pooled center
// descriptors. centers[b] lists the center regions of batch element b; all
// lists have equal length. Returns the B×s²×m×C attention output before the
// output projection.
Tensor focused_attention(const RegionTokenSet& set,
                         const std::vector<std::vector<std::size_t>>& centers,
                         std::size_t heads, Tensor* weights = nullptr);

struct BlockOptions {
  std::size_t channels = 0;
  std::size_t heads = 1;
  std::size_t grid = 1;     // s
  std::size_t k = 1;        // requested centers; clamped to s²
  std::size_t knn = 0;      // 0: default_knn(s²)
  std::size_t mlp_ratio = 4;
  bool focused = true;      // false: global attention without centers
};

struct BlockTrace {
  std::vector<Tensor> attention;        // per block
  std::vector<ClusterStats> clusters;   // per block and batch element
};

// Pre-norm transformer block whose token mixer is focused attention.
class Block {
 public:
  Block() = default;
  Block(nn::ParamFactory f, const BlockOptions& opt);

  // x: B×C×H×W → same shape.
  Tensor operator()(const Tensor& x, BlockTrace* trace = nullptr) const;

  const BlockOptions& options() const { return opt_; }
  std::size_t effective_k() const;

 private:
  BlockOptions opt_;
  nn::LayerNorm norm1_, norm2_;
  nn::Linear q_, k_, v_, proj_;
  nn::FeedForward ffn_;
};

}  // namespace hgi::rtfa
