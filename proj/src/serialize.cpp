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

#include "hgi/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "hgi/error.hpp"

namespace hgi::io {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

namespace {

void need(std::span<const std::uint8_t> in, std::size_t off, std::size_t n,
          std::size_t origin, const char* what) {
  if (off + n > in.size()) {
    throw ParseError(std::string("truncated ") + what + ": need " +
                         std::to_string(n) + " bytes, " +
                         std::to_string(in.size() > off ? in.size() - off : 0) +
                         " available",
                     origin + off);
  }
}

}  // namespace

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& off,
                      std::size_t origin) {
  need(in, off, 4, origin, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
  off += 4;
  return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& off,
                      std::size_t origin) {
  need(in, off, 8, origin, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[off + i]) << (8 * i);
  off += 8;
  return v;
}

double get_f64(std::span<const std::uint8_t> in, std::size_t& off,
               std::size_t origin) {
  return std::bit_cast<double>(get_u64(in, off, origin));
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  std::vector<std::uint8_t> out;
  const Shape& s = t.shape();
  out.reserve(8 + 4 * s.size() + 8 * t.numel());
  out.insert(out.end(), kTensorMagic, kTensorMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  for (std::size_t d : s) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw DimensionError("extent too large for HGT1: " + shape_str(s));
    }
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (double v : t.values()) put_f64(out, v);
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset,
                     std::size_t origin) {
  need(bytes, offset, 4, origin, "tensor magic");
  if (std::memcmp(bytes.data() + offset, kTensorMagic, 4) != 0) {
    throw ParseError("bad tensor magic (expected \"HGT1\")", origin + offset);
  }
  offset += 4;
  const std::uint32_t rank = get_u32(bytes, offset, origin);
  if (rank > 16) {
    throw ParseError("implausible tensor rank " + std::to_string(rank),
                     origin + offset - 4);
  }
  Shape shape(rank);
  for (auto& d : shape) d = get_u32(bytes, offset, origin);
  const std::size_t n = shape_numel(shape);
  need(bytes, offset, 8 * n, origin, "tensor payload");
  std::vector<double> data(n);
  for (auto& v : data) v = get_f64(bytes, offset, origin);
  return Tensor(std::move(shape), std::move(data));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to " + path.string() + " failed");
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  write_file(path, encode_tensor(t));
}

Tensor load_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t off = 0;
  Tensor t = decode_tensor(bytes, off);
  if (off != bytes.size()) {
    throw ParseError("trailing bytes after tensor", off);
  }
  return t;
}

}  // namespace hgi::io
