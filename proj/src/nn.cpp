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

#include "hgi/nn.hpp"

#include <cmath>

#include "hgi/error.hpp"

namespace hgi::nn {

Tensor ParameterStore::add(const std::string& name, Tensor t) {
  if (!params_.emplace(name, t).second) {
    throw ContractError("duplicate parameter name " + name);
  }
  return t;
}

bool ParameterStore::contains(const std::string& name) const {
  return params_.count(name) != 0;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter " + name);
  return it->second;
}

std::vector<Tensor> ParameterStore::trainable() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : params_) {
    if (t.requires_grad()) out.push_back(t);
  }
  return out;
}

std::size_t ParameterStore::trainable_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) {
    if (t.requires_grad()) n += t.numel();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

Tensor ParamFactory::weight(const std::string& name, Shape shape) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng_->truncated_normal(0.02);
  return store_->add(prefix_ + name, Tensor(std::move(shape), std::move(v), true));
}

Tensor ParamFactory::zeros(const std::string& name, Shape shape) {
  return store_->add(prefix_ + name, Tensor::zeros(std::move(shape), true));
}

Tensor ParamFactory::ones(const std::string& name, Shape shape) {
  return store_->add(prefix_ + name, Tensor::full(std::move(shape), 1.0, true));
}

Tensor ParamFactory::buffer(const std::string& name, Shape shape,
                            double value) {
  return store_->add(prefix_ + name,
                     Tensor::full(std::move(shape), value, false));
}

Linear::Linear(ParamFactory f, std::size_t in, std::size_t out,
               bool with_bias) {
  weight = f.weight("weight", {in, out});
  if (with_bias) bias = f.zeros("bias", {out});
}

Conv2d::Conv2d(ParamFactory f, std::size_t in, std::size_t out, std::size_t k,
               std::size_t stride_, bool with_bias)
    : stride(stride_), padding(k / 2) {
  kernel = f.weight("weight", {out, in, k, k});
  if (with_bias) bias = f.zeros("bias", {out});
}

BatchNorm2d::BatchNorm2d(ParamFactory f, std::size_t channels) {
  gamma = f.ones("weight", {channels});
  beta = f.zeros("bias", {channels});
  state.running_mean = f.buffer("running_mean", {channels}, 0.0);
  state.running_var = f.buffer("running_var", {channels}, 1.0);
}

Tensor BatchNorm2d::operator()(const Tensor& x, bool training) const {
  BatchNormState s = state;  // handles share storage with the store
  return batch_norm(x, gamma, beta, s, training);
}

LayerNorm::LayerNorm(ParamFactory f, std::size_t channels) {
  gamma = f.ones("weight", {channels});
  beta = f.zeros("bias", {channels});
}

ConvBnRelu::ConvBnRelu(ParamFactory f, std::size_t in, std::size_t out,
                       std::size_t k, std::size_t stride)
    : conv(f.scope("conv"), in, out, k, stride, true),
      bn(f.scope("bn"), out) {}

FeedForward::FeedForward(ParamFactory f, std::size_t channels,
                         std::size_t hidden)
    : fc1(f.scope("fc1"), channels, hidden), fc2(f.scope("fc2"), hidden, channels) {}

namespace {

// S×n×C → (S·h)×n×d
Tensor split_heads(const Tensor& x, std::size_t heads) {
  const std::size_t s = x.dim(0), n = x.dim(1), c = x.dim(2), d = c / heads;
  auto r = reshape(x, {s, n, heads, d});
  return reshape(permute(r, {0, 2, 1, 3}), {s * heads, n, d});
}

// (S·h)×n×d → S×n×C
Tensor merge_heads(const Tensor& x, std::size_t heads) {
  const std::size_t sh = x.dim(0), n = x.dim(1), d = x.dim(2), s = sh / heads;
  auto r = reshape(x, {s, heads, n, d});
  return reshape(permute(r, {0, 2, 1, 3}), {s, n, heads * d});
}

}  // namespace

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            std::size_t heads, Tensor* weights) {
  if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3 ||
      k.shape() != v.shape() || q.dim(0) != k.dim(0) || q.dim(2) != k.dim(2)) {
    throw DimensionError("attention: incompatible q " + shape_str(q.shape()) +
                         ", k " + shape_str(k.shape()) + ", v " +
                         shape_str(v.shape()));
  }
  const std::size_t c = q.dim(2);
  if (heads == 0 || c % heads != 0) {
    throw ConfigError("attention: " + std::to_string(heads) +
                      " heads do not divide " + std::to_string(c) +
                      " channels");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(c / heads));
  auto qh = split_heads(q, heads);
  auto kh = split_heads(k, heads);
  auto vh = split_heads(v, heads);
  auto scores = mul_scalar(bmm(qh, transpose_last2(kh)), scale);
  auto attn = softmax_rows(scores);
  if (weights) *weights = attn;
  return merge_heads(bmm(attn, vh), heads);
}

TransformerLayer::TransformerLayer(ParamFactory f, std::size_t channels,
                                   std::size_t heads_, std::size_t mlp_ratio)
    : norm1(f.scope("norm1"), channels),
      norm2(f.scope("norm2"), channels),
      q(f.scope("q"), channels, channels),
      k(f.scope("k"), channels, channels),
      v(f.scope("v"), channels, channels),
      proj(f.scope("proj"), channels, channels),
      ffn(f.scope("ffn"), channels, channels * mlp_ratio),
      heads(heads_) {
  if (heads == 0 || channels % heads != 0) {
    throw ConfigError("transformer: " + std::to_string(heads) +
                      " heads do not divide " + std::to_string(channels) +
                      " channels");
  }
}

Tensor TransformerLayer::operator()(const Tensor& x,
                                    std::vector<Tensor>* weights) const {
  auto h = norm1(x);
  Tensor w;
  auto a = multi_head_attention(q(h), k(h), v(h), heads, weights ? &w : nullptr);
  if (weights) weights->push_back(w);
  auto y = add(x, proj(a));
  return add(y, ffn(norm2(y)));
}

}  // namespace hgi::nn
