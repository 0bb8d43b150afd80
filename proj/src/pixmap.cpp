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

#include "hgi/pixmap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hgi/error.hpp"
#include "hgi/serialize.hpp"

namespace hgi::io {

namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

// Skips whitespace and '#' comments that run to the end of the line.
void skip_separators(std::span<const std::uint8_t> in, std::size_t& off) {
  while (off < in.size()) {
    if (is_space(in[off])) {
      ++off;
    } else if (in[off] == '#') {
      while (off < in.size() && in[off] != '\n' && in[off] != '\r') ++off;
    } else {
      break;
    }
  }
}

std::size_t read_uint(std::span<const std::uint8_t> in, std::size_t& off,
                      const char* field) {
  skip_separators(in, off);
  if (off >= in.size()) {
    throw ParseError(std::string("header ends before ") + field, off);
  }
  if (in[off] < '0' || in[off] > '9') {
    throw ParseError(std::string("expected decimal ") + field, off);
  }
  std::size_t v = 0;
  while (off < in.size() && in[off] >= '0' && in[off] <= '9') {
    v = v * 10 + (in[off] - '0');
    if (v > (1u << 24)) throw ParseError(std::string(field) + " too large", off);
    ++off;
  }
  return v;
}

}  // namespace

Pixmap decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError("bad pixmap magic (expected P5 or P6)", 0);
  }
  Pixmap img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  std::size_t off = 2;
  if (off < bytes.size() && !is_space(bytes[off]) && bytes[off] != '#') {
    throw ParseError("missing separator after magic", off);
  }
  img.width = read_uint(bytes, off, "width");
  img.height = read_uint(bytes, off, "height");
  const std::size_t maxval_at = off;
  const std::size_t maxval = read_uint(bytes, off, "maxval");
  if (img.width == 0 || img.height == 0) {
    throw ParseError("zero pixmap extent", maxval_at);
  }
  if (maxval != 255) {
    throw ParseError("unsupported maxval " + std::to_string(maxval) +
                         " (only 255)",
                     maxval_at);
  }
  if (off >= bytes.size() || !is_space(bytes[off])) {
    throw ParseError("missing whitespace before pixel data", off);
  }
  ++off;
  const std::size_t need = img.width * img.height * img.channels;
  if (bytes.size() - off < need) {
    throw ParseError("truncated payload: expected " + std::to_string(need) +
                         " bytes, got " + std::to_string(bytes.size() - off),
                     off);
  }
  img.pixels.assign(bytes.begin() + static_cast<long>(off),
                    bytes.begin() + static_cast<long>(off + need));
  return img;
}

std::vector<std::uint8_t> encode_pnm(const Pixmap& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw ContractError("pixmap must have 1 or 3 channels");
  }
  if (img.pixels.size() != img.width * img.height * img.channels) {
    throw DimensionError("pixmap payload does not match its extents");
  }
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") +
                             "\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

Pixmap read_pnm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_pnm(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

void write_pnm(const std::filesystem::path& path, const Pixmap& img) {
  write_file(path, encode_pnm(img));
}

Tensor image_tensor(const Pixmap& img) {
  const std::size_t h = img.height, w = img.width, c = img.channels;
  std::vector<double> v(3 * h * w);
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < h * w; ++i) {
      v[ch * h * w + i] = img.pixels[i * c + (c == 3 ? ch : 0)] / 255.0;
    }
  return Tensor({1, 3, h, w}, std::move(v));
}

Tensor mask_tensor(const Pixmap& img, bool* thresholded) {
  if (img.channels != 1) throw DataError("masks must be gray (P5) pixmaps");
  std::vector<double> v(img.pixels.size());
  bool odd = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = img.pixels[i];
    odd = odd || (p != 0 && p != 255);
    v[i] = p >= 128 ? 1.0 : 0.0;
  }
  if (thresholded) *thresholded = odd;
  return Tensor({1, 1, img.height, img.width}, std::move(v));
}

Pixmap gray_from_map(std::span<const double> map, std::size_t h,
                     std::size_t w) {
  if (map.size() != h * w) throw DimensionError("gray_from_map: size mismatch");
  Pixmap img;
  img.width = w;
  img.height = h;
  img.channels = 1;
  img.pixels.resize(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    const double v = std::round(255.0 * std::clamp(map[i], 0.0, 1.0));
    img.pixels[i] = static_cast<std::uint8_t>(v);
  }
  return img;
}

Pixmap rgb_from_planes(std::span<const double> planes, std::size_t h,
                       std::size_t w) {
  if (planes.size() != 3 * h * w) {
    throw DimensionError("rgb_from_planes: size mismatch");
  }
  Pixmap img;
  img.width = w;
  img.height = h;
  img.channels = 3;
  img.pixels.resize(3 * h * w);
  for (std::size_t i = 0; i < h * w; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = std::round(255.0 * std::clamp(planes[c * h * w + i], 0.0, 1.0));
      img.pixels[i * 3 + c] = static_cast<std::uint8_t>(v);
    }
  return img;
}

}  // namespace hgi::io
