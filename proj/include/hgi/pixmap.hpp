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

// Binary portable pixmaps: P5 (gray) and P6 (RGB), maxval 255.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hgi/tensor.hpp"

namespace hgi::io {

struct Pixmap {
  std::size_t width = 0, height = 0;
  std::size_t channels = 1;  // 1 for P5, 3 for P6
  std::vector<std::uint8_t> pixels;  // row-major, interleaved
};

Pixmap decode_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const Pixmap& img);
Pixmap read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Pixmap& img);

// 1×3×H×W in [0, 1]; gray input is replicated over the three channels.
Tensor image_tensor(const Pixmap& img);
// 1×1×H×W in {0, 1}. Values other than 0 and 255 are thresholded at 128;
// `thresholded` is set when that happened.
Tensor mask_tensor(const Pixmap& img, bool* thresholded = nullptr);
// Gray pixmap from an H×W map in [0, 1]: round(255·p), clamped.
Pixmap gray_from_map(std::span<const double> map, std::size_t h, std::size_t w);
// RGB pixmap from a 3×H×W tensor payload in [0, 1].
Pixmap rgb_from_planes(std::span<const double> planes, std::size_t h,
                       std::size_t w);

}  // namespace hgi::io
