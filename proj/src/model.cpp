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

#include "hgi/model.hpp"

#include <algorithm>
#include <cstring>

#include <spdlog/spdlog.h>

#include "hgi/error.hpp"
#include "hgi/serialize.hpp"

namespace hgi::model {

std::array<bool, 3> pair_placement(std::size_t pairs) {
  switch (pairs) {
    case 0: return {false, false, false};
    case 1: return {false, true, false};
    case 2: return {true, false, true};
    case 3: return {true, true, true};
    default:
      throw ConfigError("hgit_pairs must be 0, 1, 2 or 3, got " +
                        std::to_string(pairs));
  }
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  nn::ParamFactory root(store_, rng);
  const auto& c = config_.channels;
  const bool focused = config_.attention == AttentionKind::kRtfa;

  for (std::size_t i = 0; i < 4; ++i) {
    auto f = root.scope("backbone.stage" + std::to_string(i + 1));
    if (i == 0) {
      stages_[i].down = nn::Conv2d(f.scope("embed"), 3, c[0], 7, 4);
    } else {
      stages_[i].down = nn::Conv2d(f.scope("down"), c[i - 1], c[i], 3, 2);
    }
    rtfa::BlockOptions opt;
    opt.channels = c[i];
    opt.heads = config_.heads[i];
    opt.grid = config_.region_grid[i];
    opt.k = config_.cluster_k[i];
    opt.knn = config_.knn;
    opt.mlp_ratio = config_.mlp_ratio;
    opt.focused = focused;
    if (focused && opt.k > opt.grid * opt.grid) {
      spdlog::info("stage {}: cluster k {} clamped to {} regions", i + 1,
                   opt.k, opt.grid * opt.grid);
    }
    for (std::size_t b = 0; b < config_.depths[i]; ++b) {
      stages_[i].blocks.emplace_back(f.scope("block" + std::to_string(b)), opt);
    }
  }

  const auto placement = pair_placement(config_.hgit_pairs);
  for (std::size_t p = 0; p < 3; ++p) {
    auto f = root.scope("bridge" + std::to_string(p + 1));
    Bridge& br = bridges_[p];
    br.graph = placement[p];
    if (br.graph) {
      hgit::PairOptions opt;
      opt.channels_i = c[p];
      opt.channels_j = c[p + 1];
      opt.latent_channels = config_.latent_channels;
      opt.nodes = config_.graph_nodes;
      opt.layers = config_.hgit_layers;
      opt.heads = config_.hgit_heads;
      br.pair = hgit::Pair(f.scope("hgit"), opt);
    } else {
      br.plain_i = nn::ConvBnRelu(f.scope("plain_i"), c[p], c[p]);
      br.plain_j = nn::ConvBnRelu(f.scope("plain_j"), c[p + 1], c[p + 1]);
    }
  }

  decoder::DecoderOptions dopt;
  dopt.channels = c;
  dopt.head_layers = config_.head_layers;
  dopt.variant = config_.decoder == DecoderKind::kCaff ? decoder::Variant::kCaff
                                                       : decoder::Variant::kFpn;
  decoder_ = decoder::Decoder(root.scope("decoder"), dopt);
}

ForwardResult Model::forward(const Tensor& images, bool training,
                             ForwardTrace* trace) const {
  if (images.rank() != 4 || images.dim(1) != 3 ||
      images.dim(2) != config_.input_height ||
      images.dim(3) != config_.input_width) {
    throw DimensionError("model expects B×3×" +
                         std::to_string(config_.input_height) + "×" +
                         std::to_string(config_.input_width) + " images, got " +
                         shape_str(images.shape()));
  }
  ForwardResult out;
  Tensor x = images;
  for (std::size_t i = 0; i < 4; ++i) {
    x = stages_[i].down(x);
    for (const auto& block : stages_[i].blocks) {
      x = block(x, trace ? &trace->backbone : nullptr);
    }
    out.stages[i] = x;
  }

  std::array<Tensor, 3> to_i, to_j;
  for (std::size_t p = 0; p < 3; ++p) {
    const Bridge& br = bridges_[p];
    if (br.graph) {
      hgit::PairTrace pt;
      auto r = br.pair(out.stages[p], out.stages[p + 1], trace ? &pt : nullptr);
      to_i[p] = r.to_i;
      to_j[p] = r.to_j;
      if (trace) trace->pairs.push_back(std::move(pt));
    } else {
      to_i[p] = br.plain_i(out.stages[p], training);
      to_j[p] = br.plain_j(out.stages[p + 1], training);
    }
  }
  out.pyramid = decoder_(to_i, to_j, config_.input_height, config_.input_width,
                         training);
  return out;
}

namespace {

constexpr char kCheckpointMagic[4] = {'H', 'G', 'C', '1'};

struct ManifestEntry {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;
};

struct Parsed {
  std::string config_text;
  std::vector<ManifestEntry> manifest;
  std::size_t blob_start = 0;
};

Parsed parse_header(std::span<const std::uint8_t> bytes) {
  Parsed p;
  std::size_t off = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw ParseError("not a checkpoint (expected \"HGC1\")", 0);
  }
  off = 4;
  const std::uint64_t len = io::get_u64(bytes, off);
  if (len > bytes.size() - off) {
    throw ParseError("truncated config text: need " + std::to_string(len) +
                         " bytes, " + std::to_string(bytes.size() - off) +
                         " available",
                     off);
  }
  p.config_text.assign(reinterpret_cast<const char*>(bytes.data() + off), len);
  off += len;
  const std::uint32_t count = io::get_u32(bytes, off);
  for (std::uint32_t i = 0; i < count; ++i) {
    ManifestEntry e;
    const std::uint32_t nlen = io::get_u32(bytes, off);
    if (nlen > bytes.size() - off) {
      throw ParseError("truncated parameter name", off);
    }
    e.name.assign(reinterpret_cast<const char*>(bytes.data() + off), nlen);
    off += nlen;
    const std::uint32_t rank = io::get_u32(bytes, off);
    if (rank > 16) throw ParseError("implausible rank for " + e.name, off - 4);
    e.shape.resize(rank);
    for (auto& d : e.shape) d = io::get_u32(bytes, off);
    e.offset = io::get_u64(bytes, off);
    p.manifest.push_back(std::move(e));
  }
  p.blob_start = off;
  return p;
}

}  // namespace

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const auto& params = model.parameters().entries();
  std::vector<std::uint8_t> blobs;
  std::vector<ManifestEntry> manifest;
  for (const auto& [name, t] : params) {
    manifest.push_back({name, t.shape(), blobs.size()});
    auto enc = io::encode_tensor(t);
    blobs.insert(blobs.end(), enc.begin(), enc.end());
  }
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 4);
  const std::string cfg = model.config().to_text();
  io::put_u64(out, cfg.size());
  out.insert(out.end(), cfg.begin(), cfg.end());
  io::put_u32(out, static_cast<std::uint32_t>(manifest.size()));
  for (const auto& e : manifest) {
    io::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    io::put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) io::put_u32(out, static_cast<std::uint32_t>(d));
    io::put_u64(out, e.offset);
  }
  out.insert(out.end(), blobs.begin(), blobs.end());
  io::write_file(path, out);
}

void load_checkpoint(Model& model, const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  Parsed p;
  try {
    p = parse_header(bytes);
  } catch (const ParseError& e) {
    throw CheckpointError("corrupt checkpoint " + path.string() + ": " +
                          e.what());
  }
  const auto& params = model.parameters().entries();
  std::map<std::string, const ManifestEntry*> by_name;
  for (const auto& e : p.manifest) by_name[e.name] = &e;
  for (const auto& [name, t] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw CheckpointError("checkpoint " + path.string() +
                            " lacks parameter " + name);
    }
    if (it->second->shape != t.shape()) {
      throw CheckpointError("parameter " + name + " has shape " +
                            shape_str(it->second->shape) +
                            " in checkpoint, model expects " +
                            shape_str(t.shape()));
    }
  }
  for (const auto& e : p.manifest) {
    if (!params.count(e.name)) {
      throw CheckpointError("checkpoint " + path.string() +
                            " has unexpected parameter " + e.name);
    }
  }
  // Decode everything before touching the model so a corrupt file leaves it
  // unchanged.
  std::vector<std::pair<Tensor, Tensor>> staged;
  const auto blob = std::span<const std::uint8_t>(bytes).subspan(p.blob_start);
  for (const auto& e : p.manifest) {
    std::size_t off = e.offset;
    Tensor loaded;
    try {
      if (off > blob.size()) {
        throw ParseError("blob offset past end of file", p.blob_start + off);
      }
      loaded = io::decode_tensor(blob, off, p.blob_start);
    } catch (const ParseError& err) {
      throw CheckpointError("corrupt checkpoint " + path.string() +
                            " at parameter " + e.name + ": " + err.what());
    }
    if (loaded.shape() != e.shape) {
      throw CheckpointError("corrupt checkpoint " + path.string() +
                            ": blob of " + e.name + " disagrees with manifest");
    }
    staged.emplace_back(params.at(e.name), std::move(loaded));
  }
  for (auto& [dst, src] : staged) {
    auto d = dst.mutable_values();
    std::copy(src.values().begin(), src.values().end(), d.begin());
  }
}

ModelConfig checkpoint_config(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return ModelConfig::from_text(parse_header(bytes).config_text);
  } catch (const ParseError& e) {
    throw CheckpointError("corrupt checkpoint " + path.string() + ": " +
                          e.what());
  }
}

}  // namespace hgi::model
