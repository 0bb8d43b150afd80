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

#include "hgi/config.hpp"

#include <charconv>
#include <sstream>
#include <string_view>
#include <vector>

#include "hgi/error.hpp"
#include "hgi/serialize.hpp"

namespace hgi {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  T v{};
  text = trim(text);
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("config key " + key + ": cannot parse \"" +
                      std::string(text) + "\" as a number");
  }
  return v;
}

template <std::size_t N>
std::array<std::size_t, N> parse_list(const std::string& key,
                                      const std::string& text) {
  std::array<std::size_t, N> out{};
  std::size_t count = 0, start = 0;
  while (true) {
    auto comma = text.find(',', start);
    auto item = std::string_view(text).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (count == N) {
      throw ConfigError("config key " + key + ": expected " +
                        std::to_string(N) + " values");
    }
    out[count++] = parse_number<std::size_t>(key, item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (count != N) {
    throw ConfigError("config key " + key + ": expected " + std::to_string(N) +
                      " values, got " + std::to_string(count));
  }
  return out;
}

template <std::size_t N>
std::string join(const std::array<std::size_t, N>& a) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) s += ",";
    s += std::to_string(a[i]);
  }
  return s;
}

// Reads and erases `key` if present.
bool take(KeyValues& kv, const std::string& key, std::string& value) {
  auto it = kv.find(key);
  if (it == kv.end()) return false;
  value = it->second;
  kv.erase(it);
  return true;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid configuration: " + what);
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (!line.empty()) {
      auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError("config line without '='", pos);
      }
      std::string key(trim(line.substr(0, eq)));
      std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) throw ParseError("config line without a key", pos);
      if (!kv.emplace(key, value).second) {
        throw ParseError("repeated config key " + key, pos);
      }
    }
    pos = nl + 1;
  }
  return kv;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.input_height = 512;
  c.input_width = 512;
  c.channels = {64, 128, 256, 512};
  c.depths = {2, 2, 8, 2};
  c.heads = {1, 2, 4, 8};
  c.region_grid = {8, 8, 8, 8};
  return c;
}

std::size_t ModelConfig::stage_height(std::size_t i) const {
  return input_height / strides.at(i);
}

std::size_t ModelConfig::stage_width(std::size_t i) const {
  return input_width / strides.at(i);
}

void ModelConfig::validate() const {
  require(input_height > 0 && input_width > 0, "input extents must be positive");
  require(strides == std::array<std::size_t, 4>{4, 8, 16, 32},
          "strides must be 4,8,16,32 (stride-4 embedding, then 2 per stage)");
  require(input_height % 32 == 0 && input_width % 32 == 0,
          "strides must divide the input size " + std::to_string(input_height) +
              "x" + std::to_string(input_width));
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string st = "stage " + std::to_string(i + 1);
    require(channels[i] > 0, st + " channels must be positive");
    require(depths[i] > 0, st + " needs at least one block");
    require(heads[i] > 0 && channels[i] % heads[i] == 0,
            st + " heads " + std::to_string(heads[i]) + " must divide " +
                std::to_string(channels[i]) + " channels");
    if (attention == AttentionKind::kRtfa) {
      const std::size_t s = region_grid[i];
      require(s > 0 && stage_height(i) % s == 0 && stage_width(i) % s == 0,
              st + " region grid " + std::to_string(s) +
                  " must divide the stage map " +
                  std::to_string(stage_height(i)) + "x" +
                  std::to_string(stage_width(i)));
      require(cluster_k[i] >= 1, st + " cluster k must be at least 1");
      if (knn != 0 && s * s > 1) {
        require(knn < s * s, "knn " + std::to_string(knn) + " must be below " +
                                 st + "'s " + std::to_string(s * s) +
                                 " regions");
      }
    }
  }
  require(mlp_ratio > 0, "mlp_ratio must be positive");
  require(graph_nodes > 0, "graph_nodes must be positive");
  require(latent_channels > 0, "latent_channels must be positive");
  require(hgit_heads > 0 && latent_channels % hgit_heads == 0,
          "hgit_heads " + std::to_string(hgit_heads) + " must divide " +
              std::to_string(latent_channels) + " latent channels");
  require(hgit_pairs <= 3, "hgit_pairs must be 0, 1, 2 or 3");
  require(loss_lambda >= 0.0 && loss_lambda <= 1.0,
          "loss_lambda must lie in [0, 1]");
}

std::string ModelConfig::to_text() const {
  std::ostringstream o;
  o << "input_height = " << input_height << "\n"
    << "input_width = " << input_width << "\n"
    << "strides = " << join(strides) << "\n"
    << "channels = " << join(channels) << "\n"
    << "depths = " << join(depths) << "\n"
    << "heads = " << join(heads) << "\n"
    << "region_grid = " << join(region_grid) << "\n"
    << "cluster_k = " << join(cluster_k) << "\n"
    << "knn = " << knn << "\n"
    << "mlp_ratio = " << mlp_ratio << "\n"
    << "graph_nodes = " << graph_nodes << "\n"
    << "latent_channels = " << latent_channels << "\n"
    << "hgit_layers = " << hgit_layers << "\n"
    << "hgit_heads = " << hgit_heads << "\n"
    << "hgit_pairs = " << hgit_pairs << "\n"
    << "attention = " << (attention == AttentionKind::kRtfa ? "rtfa" : "vanilla")
    << "\n"
    << "decoder = " << (decoder == DecoderKind::kCaff ? "caff" : "fpn") << "\n"
    << "head_layers = " << head_layers << "\n"
    << "loss_lambda = " << format_double(loss_lambda) << "\n"
    << "seed = " << seed << "\n";
  return o.str();
}

ModelConfig ModelConfig::from_key_values(KeyValues& kv) {
  ModelConfig c;
  std::string v;
  auto num = [&](const char* key, std::size_t& field) {
    if (take(kv, key, v)) field = parse_number<std::size_t>(key, v);
  };
  auto list = [&](const char* key, std::array<std::size_t, 4>& field) {
    if (take(kv, key, v)) field = parse_list<4>(key, v);
  };
  num("input_height", c.input_height);
  num("input_width", c.input_width);
  list("strides", c.strides);
  list("channels", c.channels);
  list("depths", c.depths);
  list("heads", c.heads);
  list("region_grid", c.region_grid);
  list("cluster_k", c.cluster_k);
  num("knn", c.knn);
  num("mlp_ratio", c.mlp_ratio);
  num("graph_nodes", c.graph_nodes);
  num("latent_channels", c.latent_channels);
  num("hgit_layers", c.hgit_layers);
  num("hgit_heads", c.hgit_heads);
  num("hgit_pairs", c.hgit_pairs);
  num("head_layers", c.head_layers);
  if (take(kv, "attention", v)) {
    if (v == "rtfa") c.attention = AttentionKind::kRtfa;
    else if (v == "vanilla") c.attention = AttentionKind::kVanilla;
    else throw ConfigError("config key attention: expected rtfa or vanilla, got " + v);
  }
  if (take(kv, "decoder", v)) {
    if (v == "caff") c.decoder = DecoderKind::kCaff;
    else if (v == "fpn") c.decoder = DecoderKind::kFpn;
    else throw ConfigError("config key decoder: expected caff or fpn, got " + v);
  }
  if (take(kv, "loss_lambda", v)) c.loss_lambda = parse_number<double>("loss_lambda", v);
  if (take(kv, "seed", v)) c.seed = parse_number<std::uint64_t>("seed", v);
  return c;
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  auto kv = parse_key_values(text);
  auto c = from_key_values(kv);
  if (!kv.empty()) throw ConfigError("unknown config key " + kv.begin()->first);
  return c;
}

void TrainConfig::validate() const {
  require(batch_size > 0, "batch_size must be positive");
  require(steps > 0, "steps must be positive");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay must lie in (0, 1]");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must lie in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be positive");
}

std::string TrainConfig::to_text() const {
  std::ostringstream o;
  o << "batch_size = " << batch_size << "\n"
    << "steps = " << steps << "\n"
    << "learning_rate = " << format_double(learning_rate) << "\n"
    << "lr_decay = " << format_double(lr_decay) << "\n"
    << "lr_decay_every = " << lr_decay_every << "\n"
    << "steps_per_epoch = " << steps_per_epoch << "\n"
    << "bn_recal_batches = " << bn_recal_batches << "\n"
    << "adam_beta1 = " << format_double(adam_beta1) << "\n"
    << "adam_beta2 = " << format_double(adam_beta2) << "\n"
    << "adam_eps = " << format_double(adam_eps) << "\n";
  return o.str();
}

TrainConfig TrainConfig::from_key_values(KeyValues& kv) {
  TrainConfig c;
  std::string v;
  auto num = [&](const char* key, std::size_t& field) {
    if (take(kv, key, v)) field = parse_number<std::size_t>(key, v);
  };
  auto real = [&](const char* key, double& field) {
    if (take(kv, key, v)) field = parse_number<double>(key, v);
  };
  num("batch_size", c.batch_size);
  num("steps", c.steps);
  real("learning_rate", c.learning_rate);
  real("lr_decay", c.lr_decay);
  num("lr_decay_every", c.lr_decay_every);
  num("steps_per_epoch", c.steps_per_epoch);
  num("bn_recal_batches", c.bn_recal_batches);
  real("adam_beta1", c.adam_beta1);
  real("adam_beta2", c.adam_beta2);
  real("adam_eps", c.adam_eps);
  return c;
}

RunConfig RunConfig::from_text(const std::string& text) {
  auto kv = parse_key_values(text);
  RunConfig r;
  r.model = ModelConfig::from_key_values(kv);
  r.train = TrainConfig::from_key_values(kv);
  if (!kv.empty()) throw ConfigError("unknown config key " + kv.begin()->first);
  r.model.validate();
  r.train.validate();
  return r;
}

RunConfig RunConfig::load(const std::string& path) {
  const auto bytes = io::read_file(path);
  return from_text(std::string(bytes.begin(), bytes.end()));
}

std::string RunConfig::to_text() const {
  return model.to_text() + train.to_text();
}

}  // namespace hgi
