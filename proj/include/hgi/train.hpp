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

#include <filesystem>
#include <functional>
#include <vector>

#include "hgi/config.hpp"
#include "hgi/data.hpp"
#include "hgi/model.hpp"

namespace hgi::train {

class Adam {
 public:
  Adam(std::vector<Tensor> params, double beta1, double beta2, double eps);
  // Applies one update from the accumulated gradients.
  void step(double lr);
  std::size_t steps() const { return t_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

// Step-decay schedule: lr·decay^⌊step / every⌋, every = steps/4 when unset.
double learning_rate(const TrainConfig& cfg, std::size_t step);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t last_step = 0;
  double train_loss = 0;  // mean over the epoch's steps
  double val_mae = 0;
};

struct TrainResult {
  std::vector<double> step_loss;
  std::vector<EpochRecord> epochs;
  double best_val_mae = 0;
  std::size_t best_epoch = 0;
};

struct TrainOptions {
  // When set, writes steps.csv, epochs.csv, best.hgc and last.hgc here.
  std::filesystem::path out_dir;
  std::function<void(std::size_t step, double loss)> on_step;
};

// Re-estimates every BatchNorm running mean and variance as the average of
// per-batch statistics over `batches` (forwarded in training mode in order).
void recalibrate_batch_norm(model::Model& m, const std::vector<Tensor>& batches);

// Mean per-image MAE of the final map, inference mode.
double validation_mae(const model::Model& m,
                      const std::vector<data::Sample>& samples);

// Throws NumericError naming the step when the loss is not finite.
TrainResult fit(model::Model& m, const TrainConfig& cfg,
                const std::vector<data::Sample>& train_set,
                const std::vector<data::Sample>& val_set,
                const TrainOptions& opt = {});

}  // namespace hgi::train
