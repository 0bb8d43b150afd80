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

// Synthetic camouflage data and on-disk data sets.
//
// Layout of a data set directory:
//   <dir>/train/images/NNNN.ppm   <dir>/train/masks/NNNN.pgm
//   <dir>/val/images/NNNN.ppm     <dir>/val/masks/NNNN.pgm

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hgi/rng.hpp"
#include "hgi/tensor.hpp"

namespace hgi::data {

struct SynthSpec {
  std::size_t size = 64;
  std::size_t min_objects = 1;
  std::size_t max_objects = 2;
  // Value-noise lattice spacing in pixels, drawn per image from this band.
  double min_cell = 4.0;
  double max_cell = 10.0;
  double contrast = 0.1;  // object shift, in [0, 0.2]
  std::uint64_t seed = 7;

  void validate() const;
};

struct SamplePair {
  Tensor image;  // 1×3×H×W in [0, 1]
  Tensor mask;   // 1×1×H×W in {0, 1}
  // Mean |image − background texture| over object pixels and channels.
  double object_gap = 0.0;
};

SamplePair synth_sample(const SynthSpec& spec, Rng& rng);
// n samples from one generator seeded with spec.seed.
std::vector<SamplePair> synth_generate(const SynthSpec& spec, std::size_t n);
// Writes n_train + n_val pairs from one seeded sequence (train first).
void synth_write(const std::filesystem::path& dir, const SynthSpec& spec,
                 std::size_t n_train, std::size_t n_val);

struct Sample {
  std::string name;  // file stem
  Tensor image;      // 1×3×H×W
  Tensor mask;       // 1×1×H×W
};

// Loads <split_dir>/images/*.ppm with the masks of the same stem, sorted by
// name. Missing masks or extents that disagree are DataErrors.
std::vector<Sample> load_split(const std::filesystem::path& split_dir);

// Stacks 1×C×H×W tensors along the batch axis.
Tensor stack(const std::vector<Tensor>& items);

}  // namespace hgi::data
