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

// Graph interaction between two adjacent backbone stages. Each stage map is
// projected onto N latent graph nodes, the two graphs exchange information
// through row-stochastic alignment matrices, a small transformer refines the
// interacted nodes, and the result is projected back onto the stage map as a
// residual.
//
// All tensors carry a leading batch extent B.

#include <cstddef>
#include <vector>

#include "hgi/nn.hpp"
#include "hgi/tensor.hpp"

namespace hgi::hgit {

inline constexpr double kAdjacencyEps = 1e-6;

// Resize to h×w, 1×1 conv to C', flatten: B×C×H×W → B×(h·w)×C'.
Tensor unify_feature(const Tensor& f, std::size_t h, std::size_t w,
                     const nn::Conv2d& to_latent);

struct LatentGraph {
  Tensor nodes;  // B×N×C'
  Tensor basis;  // B×L×N
  std::size_t h = 0, w = 0;
};

// nodes = φ(F')ᵀ·ϕ(F'); φ and ϕ act per row.
LatentGraph graph_project(const Tensor& unified, std::size_t h, std::size_t w,
                          const nn::Linear& phi, const nn::Linear& varphi);

struct Alignment {
  Tensor forward;   // S_{i→i+1}: B×N×N
  Tensor backward;  // S_{i+1→i}
};

Alignment bidirectional_align(const Tensor& vi, const Tensor& vj,
                              const nn::Linear& psi1, const nn::Linear& psi2,
                              const nn::Linear& theta1,
                              const nn::Linear& theta2);

struct Interacted {
  Tensor fused;  // W_fuse([Ṽ_i ‖ Ṽ_{i+1}])
  Tensor vi, vj;
};

Interacted interact_nodes(const Tensor& vi, const Tensor& vj,
                          const Alignment& s, const nn::Linear& fuse);

// L = I − D^{-1/2}·A·D^{-1/2} with A = relu(V·Vᵀ) + εI. B×N×C' → B×N×N.
Tensor laplacian_pe(const Tensor& nodes);

struct TransformerTrace {
  std::vector<Tensor> attention;
  std::vector<Tensor> laplacians;
};

class GraphTransformer {
 public:
  GraphTransformer() = default;
  GraphTransformer(nn::ParamFactory f, std::size_t nodes, std::size_t channels,
                   std::size_t layers, std::size_t heads);

  // nodes: B×N×C'. The positional content is the Laplacian of `nodes`.
  Tensor operator()(const Tensor& nodes, TransformerTrace* trace) const;

 private:
  bool map_pe_ = false;
  nn::Linear pe_;
  std::vector<nn::TransformerLayer> layers_;
};

// F_i + φ'(resize(B·Ṽ')).
Tensor reproject_combine(const Tensor& refined, const LatentGraph& graph,
                         const Tensor& f, const nn::Conv2d& phi_prime);

struct PairOptions {
  std::size_t channels_i = 0, channels_j = 0;  // C_i, C_{i+1}
  std::size_t latent_channels = 64;
  std::size_t nodes = 8;
  std::size_t layers = 2;
  std::size_t heads = 8;
};

struct PairTrace {
  Alignment alignment;
  TransformerTrace transformer_i, transformer_j;
};

struct PairOutput {
  Tensor to_i;  // F_{(i+1)→i}, shape of F_i
  Tensor to_j;  // F_{i→(i+1)}, shape of F_{i+1}
};

class Pair {
 public:
  Pair() = default;
  Pair(nn::ParamFactory f, const PairOptions& opt);

  // The latent grid takes the extents of the coarser map fj.
  PairOutput operator()(const Tensor& fi, const Tensor& fj,
                        PairTrace* trace = nullptr) const;

 private:
  struct Side {
    nn::Conv2d unify;
    nn::Linear phi, varphi;
    nn::Conv2d reproject;
    GraphTransformer transformer;
  };
  Side make_side(nn::ParamFactory f, std::size_t channels) const;

  PairOptions opt_;
  Side si_, sj_;
  nn::Linear psi1_, psi2_, theta1_, theta2_, fuse_;
};

}  // namespace hgi::hgit
