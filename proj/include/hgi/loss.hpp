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

// Boundary-weighted BCE + IoU objective over the refined prediction maps.
// Maps and masks are B×1×H×W; per-sample losses are averaged over B.

#include <array>

#include "hgi/tensor.hpp"

namespace hgi::loss {

inline constexpr double kProbClamp = 1e-7;
inline constexpr std::size_t kWeightWindow = 31;
inline constexpr double kWeightGain = 5.0;

// ω = 1 + 5·|meanpool(G) − G| with a 31×31 window that averages only the
// in-image pixels it covers. Not differentiable (G is data).
Tensor pixel_weights(const Tensor& g);

// Nearest-neighbour resize of a mask: src = ⌊dst·in/out⌋.
Tensor nearest_resize(const Tensor& g, std::size_t h, std::size_t w);

// Σω·BCE / Σω with P clamped to [1e-7, 1 − 1e-7].
Tensor weighted_bce(const Tensor& p, const Tensor& g, const Tensor& w);
// 1 − Σω·PG / Σω·(P + G − PG); 0 for an empty union.
Tensor weighted_iou(const Tensor& p, const Tensor& g, const Tensor& w);

// λ·wBCE + (1 − λ)·wIoU at one stage; `g` is already at the map's size.
Tensor stage_loss(const Tensor& p, const Tensor& g, double lambda);

// Stage weights 2^{i−3} for i = 1..3, finest first.
inline constexpr std::array<double, 3> kStageWeights{0.25, 0.5, 1.0};

// Σ_i 2^{i−3}·stage_loss(P'_i, G_i, λ); G is full resolution and resized
// per stage.
Tensor total_loss(const std::array<Tensor, 3>& refined, const Tensor& g,
                  double lambda);

}  // namespace hgi::loss
