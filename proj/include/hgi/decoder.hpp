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

// Confidence-aggregated decoder over the three interaction stages, plus a
// plain top-down (FPN-style) alternative with the same outputs.
//
// Index 0 of every array is the finest interaction stage.

#include <array>
#include <cstddef>
#include <vector>

#include "hgi/nn.hpp"
#include "hgi/tensor.hpp"

namespace hgi::decoder {

enum class Variant { kCaff, kFpn };

struct PredictionPyramid {
  std::array<Tensor, 3> concatenated;  // F^C_i
  std::array<Tensor, 3> coarse;        // P_i (CAFF only)
  std::array<Tensor, 3> reweighted;    // F^H_i
  std::array<Tensor, 3> fused;         // F*_i
  std::array<Tensor, 3> refined;       // P'_i
  Tensor final_map;                    // B×1×H×W
};

// P ⊙ (1 − P)
Tensor ambiguity_indicator(const Tensor& p);
// F^C ⊙ conv(P ⊙ (1 − P)) + F^C, the single-channel conv broadcast over C.
Tensor ambiguity_reweight(const Tensor& fc, const Tensor& p,
                          const nn::Conv2d& conv);

struct DecoderOptions {
  std::array<std::size_t, 4> channels{};  // C_1..C_4
  std::size_t head_layers = 2;
  Variant variant = Variant::kCaff;
};

class Decoder {
 public:
  Decoder() = default;
  Decoder(nn::ParamFactory f, const DecoderOptions& opt);

  // to_i[i] = F_{(i+1)→i} at stage i; to_j[i] = F_{i→(i+1)} at stage i+1.
  PredictionPyramid operator()(const std::array<Tensor, 3>& to_i,
                               const std::array<Tensor, 3>& to_j,
                               std::size_t out_h, std::size_t out_w,
                               bool training) const;

 private:
  struct Head {
    std::vector<nn::ConvBnRelu> blocks;
    nn::Conv2d out;
    Tensor operator()(const Tensor& x, bool training) const;
  };
  // Conv-BN-ReLU to 4·c_out channels, then pixel shuffle by 2.
  struct Up {
    nn::ConvBnRelu cbr;
    Tensor operator()(const Tensor& x, bool training) const;
  };
  Head make_head(nn::ParamFactory f, std::size_t in, std::size_t mid) const;

  DecoderOptions opt_;
  std::array<nn::Conv2d, 3> align_;       // 1×1, C_{i+1} → C_i
  std::array<nn::ConvBnRelu, 3> squeeze_;  // 2C_i → C_i
  std::array<nn::Conv2d, 3> coarse_;      // C_i → 1
  std::array<nn::Conv2d, 3> reweight_;    // 1 → 1
  std::array<Up, 2> up_;                  // F*_{i+1} → stage i
  std::array<nn::ConvBnRelu, 2> merge_;   // F*_i for i = 0, 1
  Up up_refine_;                          // F*_2 → stage 1 for P'_1
  std::array<nn::ConvBnRelu, 2> down_;    // F^H_{i-1} → stage i
  std::array<Head, 3> heads_;
};

}  // namespace hgi::decoder
