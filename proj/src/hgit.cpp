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

#include "hgi/hgit.hpp"

#include "hgi/error.hpp"

namespace hgi::hgit {

Tensor unify_feature(const Tensor& f, std::size_t h, std::size_t w,
                     const nn::Conv2d& to_latent) {
  if (f.rank() != 4) {
    throw DimensionError("unify_feature: expected B×C×H×W, got " +
                         shape_str(f.shape()));
  }
  auto y = to_latent(bilinear_resize(f, h, w));
  const std::size_t b = y.dim(0), c = y.dim(1);
  return reshape(permute(y, {0, 2, 3, 1}), {b, h * w, c});
}

LatentGraph graph_project(const Tensor& unified, std::size_t h, std::size_t w,
                          const nn::Linear& phi, const nn::Linear& varphi) {
  if (unified.rank() != 3 || unified.dim(1) != h * w) {
    throw DimensionError("graph_project: expected B×" + std::to_string(h * w) +
                         "×C', got " + shape_str(unified.shape()));
  }
  LatentGraph g;
  g.h = h;
  g.w = w;
  g.basis = phi(unified);
  g.nodes = bmm(transpose_last2(g.basis), varphi(unified));
  return g;
}

Alignment bidirectional_align(const Tensor& vi, const Tensor& vj,
                              const nn::Linear& psi1, const nn::Linear& psi2,
                              const nn::Linear& theta1,
                              const nn::Linear& theta2) {
  if (vi.shape() != vj.shape()) {
    throw DimensionError("bidirectional_align: graphs " + shape_str(vi.shape()) +
                         " and " + shape_str(vj.shape()) + " differ");
  }
  Alignment a;
  a.forward = softmax_rows(bmm(psi1(vi), transpose_last2(theta1(vj))));
  a.backward = softmax_rows(bmm(psi2(vj), transpose_last2(theta2(vi))));
  return a;
}

Interacted interact_nodes(const Tensor& vi, const Tensor& vj,
                          const Alignment& s, const nn::Linear& fuse) {
  Interacted out;
  out.fused = fuse(concat({vi, vj}, 2));
  out.vi = add(bmm(s.backward, out.fused), vi);
  out.vj = add(bmm(s.forward, out.fused), vj);
  return out;
}

Tensor laplacian_pe(const Tensor& nodes) {
  if (nodes.rank() != 3) {
    throw DimensionError("laplacian_pe: expected B×N×C, got " +
                         shape_str(nodes.shape()));
  }
  const std::size_t b = nodes.dim(0), n = nodes.dim(1);
  std::vector<double> eye(b * n * n, 0.0);
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t i = 0; i < n; ++i) eye[(bi * n + i) * n + i] = 1.0;
  Tensor ident({b, n, n}, eye);
  auto adj = add(relu(bmm(nodes, transpose_last2(nodes))),
                 mul_scalar(ident, kAdjacencyEps));
  auto dinv = pow_scalar(sum_axis(adj, 2), -0.5);
  auto scale = bmm(reshape(dinv, {b, n, 1}), reshape(dinv, {b, 1, n}));
  return sub(ident, mul(adj, scale));
}

GraphTransformer::GraphTransformer(nn::ParamFactory f, std::size_t nodes,
                                   std::size_t channels, std::size_t layers,
                                   std::size_t heads)
    : map_pe_(layers > 0 && nodes != channels) {
  if (map_pe_) pe_ = nn::Linear(f.scope("pe"), nodes, channels);
  for (std::size_t i = 0; i < layers; ++i) {
    layers_.emplace_back(f.scope("layers." + std::to_string(i)), channels,
                         heads, 4);
  }
}

Tensor GraphTransformer::operator()(const Tensor& nodes,
                                    TransformerTrace* trace) const {
  if (layers_.empty()) return nodes;
  auto lap = laplacian_pe(nodes);
  if (trace) trace->laplacians.push_back(lap);
  auto x = add(nodes, map_pe_ ? pe_(lap) : lap);
  for (const auto& layer : layers_) {
    x = layer(x, trace ? &trace->attention : nullptr);
  }
  return x;
}

Tensor reproject_combine(const Tensor& refined, const LatentGraph& graph,
                         const Tensor& f, const nn::Conv2d& phi_prime) {
  if (refined.rank() != 3 || graph.basis.rank() != 3 ||
      graph.basis.dim(2) != refined.dim(1) ||
      graph.basis.dim(0) != refined.dim(0) ||
      graph.basis.dim(1) != graph.h * graph.w) {
    throw ContractError("reproject_combine: basis " +
                        shape_str(graph.basis.shape()) +
                        " does not belong to graph " +
                        shape_str(refined.shape()));
  }
  const std::size_t b = refined.dim(0), c = refined.dim(2);
  auto r = bmm(graph.basis, refined);
  auto map = permute(reshape(r, {b, graph.h, graph.w, c}), {0, 3, 1, 2});
  map = bilinear_resize(map, f.dim(2), f.dim(3));
  return add(f, phi_prime(map));
}

Pair::Side Pair::make_side(nn::ParamFactory f, std::size_t channels) const {
  const std::size_t cp = opt_.latent_channels;
  Side s;
  s.unify = nn::Conv2d(f.scope("unify"), channels, cp, 1);
  s.phi = nn::Linear(f.scope("phi"), cp, opt_.nodes);
  s.varphi = nn::Linear(f.scope("varphi"), cp, cp);
  s.reproject = nn::Conv2d(f.scope("reproject"), cp, channels, 1, 1, false);
  s.transformer = GraphTransformer(f.scope("transformer"), opt_.nodes, cp,
                                   opt_.layers, opt_.heads);
  return s;
}

Pair::Pair(nn::ParamFactory f, const PairOptions& opt) : opt_(opt) {
  const std::size_t cp = opt.latent_channels;
  if (cp == 0 || opt.nodes == 0) {
    throw ConfigError("hgit: latent channels and node count must be positive");
  }
  if (opt.heads == 0 || cp % opt.heads != 0) {
    throw ConfigError("hgit: " + std::to_string(opt.heads) +
                      " heads do not divide " + std::to_string(cp) +
                      " latent channels");
  }
  si_ = make_side(f.scope("i"), opt.channels_i);
  sj_ = make_side(f.scope("j"), opt.channels_j);
  psi1_ = nn::Linear(f.scope("psi1"), cp, cp);
  psi2_ = nn::Linear(f.scope("psi2"), cp, cp);
  theta1_ = nn::Linear(f.scope("theta1"), cp, cp);
  theta2_ = nn::Linear(f.scope("theta2"), cp, cp);
  fuse_ = nn::Linear(f.scope("fuse"), 2 * cp, cp);
}

PairOutput Pair::operator()(const Tensor& fi, const Tensor& fj,
                            PairTrace* trace) const {
  if (fi.rank() != 4 || fj.rank() != 4 || fi.dim(0) != fj.dim(0) ||
      fi.dim(1) != opt_.channels_i || fj.dim(1) != opt_.channels_j) {
    throw DimensionError("hgit pair: stage maps " + shape_str(fi.shape()) +
                         " and " + shape_str(fj.shape()) +
                         " do not match the configured channels");
  }
  const std::size_t h = fj.dim(2), w = fj.dim(3);
  auto gi = graph_project(unify_feature(fi, h, w, si_.unify), h, w, si_.phi,
                          si_.varphi);
  auto gj = graph_project(unify_feature(fj, h, w, sj_.unify), h, w, sj_.phi,
                          sj_.varphi);
  auto align = bidirectional_align(gi.nodes, gj.nodes, psi1_, psi2_, theta1_,
                                   theta2_);
  auto inter = interact_nodes(gi.nodes, gj.nodes, align, fuse_);
  auto ri = si_.transformer(inter.vi, trace ? &trace->transformer_i : nullptr);
  auto rj = sj_.transformer(inter.vj, trace ? &trace->transformer_j : nullptr);
  if (trace) trace->alignment = align;
  return {reproject_combine(ri, gi, fi, si_.reproject),
          reproject_combine(rj, gj, fj, sj_.reproject)};
}

}  // namespace hgi::hgit
