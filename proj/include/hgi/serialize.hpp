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

// Flat binary tensor format:
//
//   "HGT1"            4 bytes magic
//   rank              u32 little-endian
//   extents[rank]     u32 little-endian each
//   values            f64 little-endian, row-major
//
// Gradient state is not serialized.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hgi/tensor.hpp"

namespace hgi::io {

inline constexpr char kTensorMagic[4] = {'H', 'G', 'T', '1'};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
// Parses one tensor starting at `offset`; advances `offset` past it.
// `origin` is added to offsets reported in errors.
Tensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset,
                     std::size_t origin = 0);

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

// Little-endian primitives shared by the checkpoint writer.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f64(std::vector<std::uint8_t>& out, double v);
std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& off,
                      std::size_t origin = 0);
std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& off,
                      std::size_t origin = 0);
double get_f64(std::span<const std::uint8_t> in, std::size_t& off,
               std::size_t origin = 0);

}  // namespace hgi::io
