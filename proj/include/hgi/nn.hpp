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

// Parameterised layers shared by the backbone, the graph interaction pairs
// and the decoder. Layers hold Tensor handles registered in a ParameterStore;
// loading a checkpoint overwrites the store's storage in place, so layers
// see the loaded values without being rebuilt.

#include <map>
#include <string>
#include <vector>

#include "hgi/rng.hpp"
#include "hgi/tensor.hpp"

namespace hgi::nn {

class ParameterStore {
 public:
  // Registers `t` under a unique dotted path.
  Tensor add(const std::string& name, Tensor t);
  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  const std::map<std::string, Tensor>& entries() const { return params_; }

  // Tensors that receive gradients (excludes running statistics).
  std::vector<Tensor> trainable() const;
  std::size_t trainable_count() const;
  void zero_grad();

 private:
  std::map<std::string, Tensor> params_;
};

// Creates and registers initialised parameters under a name prefix.
class ParamFactory {
 public:
  ParamFactory(ParameterStore& store, Rng& rng, std::string prefix = "")
      : store_(&store), rng_(&rng), prefix_(std::move(prefix)) {}

  ParamFactory scope(const std::string& name) const {
    return ParamFactory(*store_, *rng_, prefix_ + name + ".");
  }

  // Truncated normal, std 0.02.
  Tensor weight(const std::string& name, Shape shape);
  Tensor zeros(const std::string& name, Shape shape);
  Tensor ones(const std::string& name, Shape shape);
  // Not trained (running statistics).
  Tensor buffer(const std::string& name, Shape shape, double value);

 private:
  ParameterStore* store_;
  Rng* rng_;
  std::string prefix_;
};

struct Linear {
  Tensor weight;  // in×out
  Tensor bias;    // out, may be undefined

  Linear() = default;
  Linear(ParamFactory f, std::size_t in, std::size_t out, bool with_bias = true);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
};

struct Conv2d {
  Tensor kernel;  // out×in×k×k
  Tensor bias;    // may be undefined
  std::size_t stride = 1;
  std::size_t padding = 0;

  Conv2d() = default;
  Conv2d(ParamFactory f, std::size_t in, std::size_t out, std::size_t k,
         std::size_t stride = 1, bool with_bias = true);
  Tensor operator()(const Tensor& x) const {
    return conv2d(x, kernel, bias, stride, padding);
  }
};

struct BatchNorm2d {
  Tensor gamma, beta;
  BatchNormState state;

  BatchNorm2d() = default;
  BatchNorm2d(ParamFactory f, std::size_t channels);
  // Running statistics are updated through shared storage in training mode.
  Tensor operator()(const Tensor& x, bool training) const;
};

struct LayerNorm {
  Tensor gamma, beta;

  LayerNorm() = default;
  LayerNorm(ParamFactory f, std::size_t channels);
  Tensor operator()(const Tensor& x) const {
    return layer_norm(x, gamma, beta);
  }
};

// 3×3 (or k×k) convolution, batch norm, ReLU.
struct ConvBnRelu {
  Conv2d conv;
  BatchNorm2d bn;

  ConvBnRelu() = default;
  ConvBnRelu(ParamFactory f, std::size_t in, std::size_t out,
             std::size_t k = 3, std::size_t stride = 1);
  Tensor operator()(const Tensor& x, bool training) const {
    return relu(bn(conv(x), training));
  }
};

struct FeedForward {
  Linear fc1, fc2;

  FeedForward() = default;
  FeedForward(ParamFactory f, std::size_t channels, std::size_t hidden);
  Tensor operator()(const Tensor& x) const { return fc2(gelu(fc1(x))); }
};

// Scaled dot-product attention, heads split along the channel axis.
// q: S×m×C, k and v: S×n×C. Returns S×m×C. When `weights` is non-null it
// receives the (S·heads)×m×n attention probabilities.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            std::size_t heads, Tensor* weights = nullptr);

// Pre-norm self-attention block over S sequences of n tokens: S×n×C.
struct TransformerLayer {
  LayerNorm norm1, norm2;
  Linear q, k, v, proj;
  FeedForward ffn;
  std::size_t heads = 1;

  TransformerLayer() = default;
  TransformerLayer(ParamFactory f, std::size_t channels, std::size_t heads,
                   std::size_t mlp_ratio);
  Tensor operator()(const Tensor& x, std::vector<Tensor>* weights) const;
};

}  // namespace hgi::nn
