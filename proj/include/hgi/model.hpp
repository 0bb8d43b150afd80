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

#include <array>
#include <filesystem>
#include <vector>

#include "hgi/config.hpp"
#include "hgi/decoder.hpp"
#include "hgi/hgit.hpp"
#include "hgi/nn.hpp"
#include "hgi/rtfa.hpp"

namespace hgi::model {

// Which of the interaction pairs (F1,F2), (F2,F3), (F3,F4) carry a graph
// interaction module for a given pair count.
std::array<bool, 3> pair_placement(std::size_t pairs);

struct ForwardTrace {
  rtfa::BlockTrace backbone;
  std::vector<hgit::PairTrace> pairs;
};

struct ForwardResult {
  std::array<Tensor, 4> stages;  // F_1..F_4
  decoder::PredictionPyramid pyramid;
};

class Model {
 public:
  // Validates the config and initialises parameters from config.seed.
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  // images: B×3×H×W with H×W equal to the configured input size.
  ForwardResult forward(const Tensor& images, bool training,
                        ForwardTrace* trace = nullptr) const;

 private:
  struct Stage {
    nn::Conv2d down;  // patch embedding for stage 1
    std::vector<rtfa::Block> blocks;
  };
  struct Bridge {
    bool graph = false;
    hgit::Pair pair;
    nn::ConvBnRelu plain_i, plain_j;
  };

  ModelConfig config_;
  nn::ParameterStore store_;
  std::array<Stage, 4> stages_;
  std::array<Bridge, 3> bridges_;
  decoder::Decoder decoder_;
};

// Checkpoint layout (little-endian):
//
//   "HGC1"
//   u64 config text length, config text
//   u32 parameter count
//   per parameter: u32 name length, name, u32 rank, u32 extents[rank],
//                  u64 blob offset (from the start of the blob section)
//   blob section: one HGT1 tensor per parameter, manifest order
void save_checkpoint(const Model& model, const std::filesystem::path& path);
// Overwrites the model's parameters in place. Every name and shape must match.
void load_checkpoint(Model& model, const std::filesystem::path& path);
// Reads only the embedded model configuration.
ModelConfig checkpoint_config(const std::filesystem::path& path);

}  // namespace hgi::model
