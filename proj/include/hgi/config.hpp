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

// Flat `key = value` configuration text. `#` starts a comment; list values
// are comma separated. Model keys match ModelConfig field names, training
// keys match TrainConfig field names, and both may share one file.

#include <array>
#include <cstdint>
#include <map>
#include <string>

namespace hgi {

using KeyValues = std::map<std::string, std::string>;

// Throws ParseError naming the line's byte offset on malformed lines or
// repeated keys.
KeyValues parse_key_values(const std::string& text);

enum class AttentionKind { kRtfa, kVanilla };
enum class DecoderKind { kCaff, kFpn };

struct ModelConfig {
  std::size_t input_height = 64;
  std::size_t input_width = 64;
  std::array<std::size_t, 4> strides{4, 8, 16, 32};
  std::array<std::size_t, 4> channels{16, 32, 64, 128};
  std::array<std::size_t, 4> depths{1, 1, 1, 1};
  std::array<std::size_t, 4> heads{1, 2, 4, 8};
  std::array<std::size_t, 4> region_grid{8, 8, 4, 2};
  std::array<std::size_t, 4> cluster_k{1, 4, 16, 64};
  std::size_t knn = 0;  // 0: max(2, ⌊s²/4⌋) per stage
  std::size_t mlp_ratio = 4;
  std::size_t graph_nodes = 8;
  std::size_t latent_channels = 64;
  std::size_t hgit_layers = 2;
  std::size_t hgit_heads = 8;
  std::size_t hgit_pairs = 3;
  AttentionKind attention = AttentionKind::kRtfa;
  DecoderKind decoder = DecoderKind::kCaff;
  std::size_t head_layers = 2;
  double loss_lambda = 0.7;
  std::uint64_t seed = 7;

  static ModelConfig desk();
  static ModelConfig paper();

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  // Side of stage i (0-based).
  std::size_t stage_height(std::size_t i) const;
  std::size_t stage_width(std::size_t i) const;

  std::string to_text() const;
  // Consumes the model keys of `kv`; other keys are left in place.
  static ModelConfig from_key_values(KeyValues& kv);
  static ModelConfig from_text(const std::string& text);

  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  std::size_t batch_size = 4;
  std::size_t steps = 300;
  double learning_rate = 3e-3;
  double lr_decay = 0.1;
  std::size_t lr_decay_every = 300;  // 0: steps / 4
  std::size_t steps_per_epoch = 0; // 0: ⌈train samples / batch⌉
  // Training batches used to re-estimate BatchNorm statistics before each
  // validation; 0 keeps the running averages.
  std::size_t bn_recal_batches = 16;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  std::string to_text() const;
  static TrainConfig from_key_values(KeyValues& kv);

  bool operator==(const TrainConfig&) const = default;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;

  // Unknown keys and invalid values are a ConfigError.
  static RunConfig from_text(const std::string& text);
  static RunConfig load(const std::string& path);
  std::string to_text() const;
};

}  // namespace hgi
