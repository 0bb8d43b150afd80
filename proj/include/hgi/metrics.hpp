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

// Camouflaged-object evaluation metrics on single-channel maps. Predictions
// lie in [0, 1]; ground truths hold only 0 and 1. Both are row-major h×w.

#include <span>
#include <string>
#include <vector>

namespace hgi::metrics {

struct MapView {
  std::span<const double> data;
  std::size_t height = 0, width = 0;
};

double mae(MapView pred, MapView gt);
// Structure measure, α = 0.5.
double s_measure(MapView pred, MapView gt, double alpha = 0.5);
// Mean enhanced-alignment measure over 256 thresholds (j + 0.5)/256.
double mean_e_measure(MapView pred, MapView gt);
// Weighted F-measure, β² = 1.
double weighted_f_measure(MapView pred, MapView gt, double beta2 = 1.0);

struct MetricReport {
  double s_measure = 0, weighted_f = 0, mean_e = 0, mae = 0;
};

MetricReport evaluate(MapView pred, MapView gt);

// 7×7 Gaussian, σ = 5, normalised to unit sum (row-major).
std::vector<double> gaussian_kernel();

inline constexpr std::size_t kEThresholds = 256;

}  // namespace hgi::metrics
