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

#include "hgi/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "hgi/error.hpp"
#include "hgi/pixmap.hpp"

namespace hgi::data {

namespace fs = std::filesystem;

void SynthSpec::validate() const {
  if (size < 16) throw ConfigError("synth: image size must be at least 16");
  if (min_objects == 0 || max_objects < min_objects) {
    throw ConfigError("synth: object count range must satisfy 1 <= min <= max");
  }
  if (!(min_cell >= 1.0) || max_cell < min_cell) {
    throw ConfigError("synth: texture cell band must satisfy 1 <= min <= max");
  }
  if (!(contrast >= 0.0 && contrast <= 0.2)) {
    throw ConfigError("synth: contrast offset must lie in [0, 0.2]");
  }
}

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Value noise in [0, 1]: random lattice values, smooth bilinear blend.
std::vector<double> value_noise(std::size_t size, double cell, Rng& rng) {
  const std::size_t lat = static_cast<std::size_t>(std::ceil(size / cell)) + 2;
  std::vector<double> grid(lat * lat);
  for (double& g : grid) g = rng.uniform();
  std::vector<double> out(size * size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double fy = y / cell, fx = x / cell;
      const auto iy = static_cast<std::size_t>(fy), ix = static_cast<std::size_t>(fx);
      const double ty = smoothstep(fy - iy), tx = smoothstep(fx - ix);
      const double a = grid[iy * lat + ix], b = grid[iy * lat + ix + 1];
      const double c = grid[(iy + 1) * lat + ix], d = grid[(iy + 1) * lat + ix + 1];
      out[y * size + x] = (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
    }
  return out;
}

// Two octaves, mapped into [0.2, 0.8].
std::vector<double> texture(std::size_t size, double cell, Rng& rng) {
  auto lo = value_noise(size, cell, rng);
  auto hi = value_noise(size, std::max(1.0, cell / 2.0), rng);
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] = 0.2 + 0.6 * (lo[i] + 0.5 * hi[i]) / 1.5;
  }
  return lo;
}

struct Blob {
  double cy, cx, radius, a2, p2, a3, p3;
};

Blob random_blob(std::size_t size, Rng& rng) {
  const double s = static_cast<double>(size);
  Blob b;
  b.radius = rng.uniform(s / 8.0, s / 4.0);
  const double margin = b.radius * 1.1;
  b.cy = rng.uniform(margin, s - margin);
  b.cx = rng.uniform(margin, s - margin);
  b.a2 = rng.uniform(0.0, 0.2);
  b.p2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  b.a3 = rng.uniform(0.0, 0.15);
  b.p3 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return b;
}

// Signed distance-like margin: positive inside the blob.
double blob_margin(const Blob& b, double y, double x) {
  const double dy = y - b.cy, dx = x - b.cx;
  const double d = std::sqrt(dy * dy + dx * dx);
  const double th = std::atan2(dy, dx);
  const double r = b.radius * (1.0 + b.a2 * std::cos(2 * th + b.p2) +
                               b.a3 * std::cos(3 * th + b.p3));
  return r - d;
}

}  // namespace

SamplePair synth_sample(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n = spec.size, hw = n * n;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double cell = rng.uniform(spec.min_cell, spec.max_cell);
    auto base = texture(n, cell, rng);
    std::array<std::vector<double>, 3> own;
    for (auto& o : own) o = texture(n, cell, rng);
    const std::size_t count =
        spec.min_objects + rng.below(spec.max_objects - spec.min_objects + 1);
    std::vector<Blob> blobs;
    for (std::size_t i = 0; i < count; ++i) blobs.push_back(random_blob(n, rng));

    std::vector<double> mask(hw, 0.0), shift(hw, 0.0);
    std::size_t fg = 0;
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        double m = -1e9;
        for (const auto& b : blobs) m = std::max(m, blob_margin(b, y + 0.5, x + 0.5));
        const std::size_t i = y * n + x;
        if (m > 0.0) {
          mask[i] = 1.0;
          ++fg;
        }
        // Soft edge about one pixel wide on either side of the boundary.
        shift[i] = smoothstep(std::clamp(m / 2.0 + 0.5, 0.0, 1.0));
      }
    if (fg == 0 || fg == hw) continue;

    SamplePair s;
    std::vector<double> img(3 * hw);
    double gap = 0.0;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < hw; ++i) {
        const double bg = 0.7 * base[i] + 0.3 * own[c][i];
        const double v = bg + spec.contrast * shift[i];
        img[c * hw + i] = v;
        if (mask[i] == 1.0) gap += std::fabs(v - bg);
      }
    s.object_gap = gap / static_cast<double>(3 * fg);
    s.image = Tensor({1, 3, n, n}, std::move(img));
    s.mask = Tensor({1, 1, n, n}, std::move(mask));
    return s;
  }
  throw DataError("synth: could not place a valid object in 64 attempts");
}

std::vector<SamplePair> synth_generate(const SynthSpec& spec, std::size_t n) {
  Rng rng(spec.seed);
  std::vector<SamplePair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(synth_sample(spec, rng));
  return out;
}

void synth_write(const fs::path& dir, const SynthSpec& spec,
                 std::size_t n_train, std::size_t n_val) {
  auto samples = synth_generate(spec, n_train + n_val);
  for (const char* split : {"train", "val"}) {
    std::error_code ec;
    fs::create_directories(dir / split / "images", ec);
    fs::create_directories(dir / split / "masks", ec);
    if (ec) {
      throw IoError("cannot create " + (dir / split).string() + ": " +
                    ec.message());
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const bool train = i < n_train;
    const fs::path split = dir / (train ? "train" : "val");
    char stem[16];
    std::snprintf(stem, sizeof stem, "%04zu", train ? i : i - n_train);
    const auto& s = samples[i];
    const std::size_t h = s.image.dim(2), w = s.image.dim(3);
    io::write_pnm(split / "images" / (std::string(stem) + ".ppm"),
                  io::rgb_from_planes(s.image.values(), h, w));
    io::write_pnm(split / "masks" / (std::string(stem) + ".pgm"),
                  io::gray_from_map(s.mask.values(), h, w));
  }
}

std::vector<Sample> load_split(const fs::path& split_dir) {
  const fs::path images = split_dir / "images", masks = split_dir / "masks";
  if (!fs::is_directory(images)) {
    throw DataError("no image directory " + images.string());
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(images)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .ppm images in " + images.string());
  std::vector<Sample> out;
  for (const auto& f : files) {
    const auto stem = f.stem().string();
    const fs::path m = masks / (stem + ".pgm");
    if (!fs::exists(m)) throw DataError("image " + f.string() + " has no mask " + m.string());
    Sample s;
    s.name = stem;
    s.image = io::image_tensor(io::read_pnm(f));
    s.mask = io::mask_tensor(io::read_pnm(m));
    if (s.image.dim(2) != s.mask.dim(2) || s.image.dim(3) != s.mask.dim(3)) {
      throw DataError("image " + f.string() + " and its mask differ in size");
    }
    out.push_back(std::move(s));
  }
  return out;
}

Tensor stack(const std::vector<Tensor>& items) {
  if (items.empty()) throw ContractError("stack: no tensors");
  return items.size() == 1 ? items[0] : concat(items, 0);
}

}  // namespace hgi::data
