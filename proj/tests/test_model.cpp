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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hgi/error.hpp"
#include "hgi/loss.hpp"
#include "hgi/model.hpp"
#include "hgi/serialize.hpp"
#include "support.hpp"

using namespace hgi;
using hgi::model::Model;
using hgi::test::random_tensor;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "hgi_test_model";
  fs::create_directories(dir);
  return dir / name;
}

double max_row_error(const Tensor& t) {
  const std::size_t cols = t.shape().back();
  const auto v = t.values();
  double worst = 0;
  for (std::size_t r = 0; r < v.size() / cols; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < cols; ++c) s += v[r * cols + c];
    worst = std::max(worst, std::fabs(s - 1.0));
  }
  return worst;
}

bool in_unit(const Tensor& t) {
  for (double v : t.values())
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

void check_shapes(const ModelConfig& cfg, const model::ForwardResult& r,
                  std::size_t batch) {
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r.stages[i].shape() ==
          Shape{batch, cfg.channels[i], cfg.stage_height(i), cfg.stage_width(i)});
  }
  const auto& p = r.pyramid;
  for (std::size_t i = 0; i < 3; ++i) {
    const Shape map{batch, 1, cfg.stage_height(i), cfg.stage_width(i)};
    CHECK(p.refined[i].shape() == map);
    CHECK(in_unit(p.refined[i]));
    if (cfg.decoder == DecoderKind::kCaff) {
      CHECK(p.coarse[i].shape() == map);
    } else {
      CHECK(!p.coarse[i].defined());
    }
  }
  CHECK(p.final_map.shape() == Shape{batch, 1, cfg.input_height, cfg.input_width});
  CHECK(in_unit(p.final_map));
}

}  // namespace

TEST_CASE("default configuration carries the published constants") {
  const auto cfg = ModelConfig::desk();
  CHECK(cfg.cluster_k == std::array<std::size_t, 4>{1, 4, 16, 64});
  CHECK(cfg.graph_nodes == 8);
  CHECK(cfg.hgit_layers == 2);
  CHECK(cfg.hgit_heads == 8);
  CHECK(cfg.loss_lambda == 0.7);
  CHECK(cfg.hgit_pairs == 3);
  const auto paper = ModelConfig::paper();
  CHECK(paper.cluster_k == cfg.cluster_k);
  CHECK(paper.input_height == 512);
  CHECK(paper.input_width == 512);
  const TrainConfig t;
  CHECK(t.adam_beta1 == 0.9);
  CHECK(t.adam_beta2 == 0.999);
  CHECK(t.adam_eps == 1e-8);
  CHECK(t.lr_decay == 0.1);
}

TEST_CASE("desk forward shapes") {
  const auto cfg = ModelConfig::desk();
  const Model m(cfg);
  Rng rng(1);
  const auto x = random_tensor({2, 3, 64, 64}, rng, 0, 1);
  const auto r = m.forward(x, false);
  const std::array<std::size_t, 4> sides{16, 8, 4, 2};
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.stages[i].shape()[2] == sides[i]);
  check_shapes(cfg, r, 2);
}

TEST_CASE("paper profile geometry") {
  const auto cfg = ModelConfig::paper();
  CHECK_NOTHROW(cfg.validate());
  const std::array<std::size_t, 4> sides{128, 64, 32, 16};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(cfg.stage_height(i) == sides[i]);
    CHECK(cfg.stage_width(i) == sides[i]);
  }
  // Same stride arithmetic with the full-size profile widths at a smaller input.
  auto small = cfg;
  small.input_height = small.input_width = 64;
  small.depths = {1, 1, 1, 1};
  small.region_grid = {4, 4, 2, 2};
  const Model m(small);
  Rng rng(2);
  check_shapes(small, m.forward(random_tensor({1, 3, 64, 64}, rng, 0, 1), false), 1);
}

TEST_CASE("forward rejects wrong extents") {
  const Model m(ModelConfig::desk());
  CHECK_THROWS_AS(m.forward(Tensor::zeros({1, 3, 32, 32}), false), DimensionError);
  CHECK_THROWS_AS(m.forward(Tensor::zeros({1, 1, 64, 64}), false), DimensionError);
  CHECK_THROWS_AS(m.forward(Tensor::zeros({3, 64, 64}), false), DimensionError);
}

TEST_CASE("forward is deterministic") {
  Rng rng(3);
  const auto x = random_tensor({1, 3, 64, 64}, rng, 0, 1);
  const Model a(ModelConfig::desk());
  const Model b(ModelConfig::desk());
  const auto ra = a.forward(x, false);
  const auto rb = b.forward(x, false);
  const auto rc = a.forward(x, false);
  CHECK(test::bit_equal(ra.pyramid.final_map, rb.pyramid.final_map));
  CHECK(test::bit_equal(ra.pyramid.final_map, rc.pyramid.final_map));
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(test::bit_equal(ra.pyramid.refined[i], rb.pyramid.refined[i]));

  auto other = ModelConfig::desk();
  other.seed = 8;
  const Model c(other);
  CHECK(!test::bit_equal(ra.pyramid.final_map, c.forward(x, false).pyramid.final_map));
}

TEST_CASE("attention and alignment rows are stochastic") {
  const Model m(ModelConfig::desk());
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    model::ForwardTrace trace;
    const auto r = m.forward(random_tensor({1, 3, 64, 64}, rng, 0, 1), false, &trace);
    CHECK(trace.backbone.attention.size() == 4);
    for (const auto& a : trace.backbone.attention) CHECK(max_row_error(a) < 1e-6);
    CHECK(trace.pairs.size() == 3);
    for (const auto& p : trace.pairs) {
      CHECK(max_row_error(p.alignment.forward) < 1e-6);
      CHECK(max_row_error(p.alignment.backward) < 1e-6);
      for (const auto* t : {&p.transformer_i, &p.transformer_j})
        for (const auto& a : t->attention) CHECK(max_row_error(a) < 1e-6);
    }
    CHECK(in_unit(r.pyramid.final_map));
  }
}

TEST_CASE("pair placement") {
  using P = std::array<bool, 3>;
  CHECK(model::pair_placement(0) == P{false, false, false});
  CHECK(model::pair_placement(1) == P{false, true, false});
  CHECK(model::pair_placement(2) == P{true, false, true});
  CHECK(model::pair_placement(3) == P{true, true, true});
  CHECK_THROWS_AS(model::pair_placement(4), ConfigError);
}

TEST_CASE("ablation matrix builds and forwards") {
  Rng rng(5);
  const auto x = random_tensor({1, 3, 64, 64}, rng, 0, 1);
  for (auto att : {AttentionKind::kRtfa, AttentionKind::kVanilla})
    for (std::size_t pairs = 0; pairs <= 3; ++pairs)
      for (auto dec : {DecoderKind::kCaff, DecoderKind::kFpn}) {
        auto cfg = ModelConfig::desk();
        cfg.attention = att;
        cfg.hgit_pairs = pairs;
        cfg.decoder = dec;
        CAPTURE(pairs);
        const Model m(cfg);
        model::ForwardTrace trace;
        const auto r = m.forward(x, false, &trace);
        check_shapes(cfg, r, 1);
        CHECK(trace.pairs.size() == pairs);
        bool has_graph = false;
        for (const auto& [name, t] : m.parameters().entries())
          if (name.find(".hgit.") != std::string::npos) has_graph = true;
        CHECK(has_graph == (pairs > 0));
      }
}

TEST_CASE("checkpoint round trip is bit exact") {
  auto cfg = ModelConfig::desk();
  Model a(cfg);
  // Perturb so the test does not pass merely because both models share a seed.
  Rng rng(6);
  for (auto& t : a.parameters().trainable())
    for (double& v : t.mutable_values()) v += rng.uniform(-0.01, 0.01);
  const auto path = scratch("round.hgc");
  model::save_checkpoint(a, path);
  CHECK(model::checkpoint_config(path) == cfg);

  Model b(cfg);
  model::load_checkpoint(b, path);
  for (const auto& [name, t] : a.parameters().entries()) {
    CAPTURE(name);
    CHECK(test::bit_equal(t, b.parameters().get(name)));
  }
  const auto x = random_tensor({1, 3, 64, 64}, rng, 0, 1);
  CHECK(test::bit_equal(a.forward(x, false).pyramid.final_map,
                        b.forward(x, false).pyramid.final_map));
}

TEST_CASE("truncated or foreign checkpoint is a corruption error") {
  Model a(ModelConfig::desk());
  const auto path = scratch("trunc.hgc");
  model::save_checkpoint(a, path);
  auto bytes = io::read_file(path);
  for (std::size_t keep : {std::size_t{2}, std::size_t{10}, std::size_t{200}, bytes.size() / 2,
                           bytes.size() - 1}) {
    CAPTURE(keep);
    const auto cut = scratch("cut.hgc");
    io::write_file(cut, std::span(bytes.data(), keep));
    try {
      model::load_checkpoint(a, cut);
      FAIL("load succeeded");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find("corrupt") != std::string::npos);
    }
  }
  bytes[0] = 'X';
  const auto bad = scratch("bad.hgc");
  io::write_file(bad, bytes);
  CHECK_THROWS_AS(model::load_checkpoint(a, bad), CheckpointError);
}

TEST_CASE("mismatched configuration names the offending parameter") {
  const auto path = scratch("mismatch.hgc");
  model::save_checkpoint(Model(ModelConfig::desk()), path);

  auto wider = ModelConfig::desk();
  wider.channels[3] = 96;
  Model w(wider);
  try {
    model::load_checkpoint(w, path);
    FAIL("load succeeded");
  } catch (const CheckpointError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("backbone.stage4") != std::string::npos);
    CHECK(msg.find("shape") != std::string::npos);
  }

  auto fpn = ModelConfig::desk();
  fpn.decoder = DecoderKind::kFpn;
  model::save_checkpoint(Model(fpn), path);
  Model caff(ModelConfig::desk());
  try {
    model::load_checkpoint(caff, path);
    FAIL("load succeeded");
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("lacks parameter") != std::string::npos);
  }
}

TEST_CASE("model gradient through the total loss matches central differences") {
  auto cfg = ModelConfig::desk();
  Model m(cfg);
  Rng rng(9);
  const auto x = random_tensor({1, 3, 64, 64}, rng, 0, 1);
  std::vector<double> g(64 * 64, 0.0);
  for (std::size_t y = 20; y < 44; ++y)
    for (std::size_t c = 16; c < 40; ++c) g[y * 64 + c] = 1.0;
  const Tensor mask({1, 1, 64, 64}, g);
  const auto loss = [&] {
    const auto r = m.forward(x, true);
    return loss::total_loss(r.pyramid.refined, mask, cfg.loss_lambda);
  };

  auto params = m.parameters().trainable();
  std::size_t total = 0;
  for (const auto& p : params) total += p.numel();
  m.parameters().zero_grad();
  {
    Tape tape;
    backward(loss());
  }

  double worst = 0;
  std::size_t checked = 0;
  const double h = 1e-5;
  for (int s = 0; s < 64; ++s) {
    std::size_t flat = rng.below(total);
    std::size_t which = 0;
    while (flat >= params[which].numel()) flat -= params[which++].numel();
    auto& p = params[which];
    const double analytic = p.grad()[flat];
    const double orig = p.values()[flat];
    p.mutable_values()[flat] = orig + h;
    const double up = loss().item();
    p.mutable_values()[flat] = orig - h;
    const double down = loss().item();
    p.mutable_values()[flat] = orig;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, test::rel_err(analytic, numeric, 1e-6));
    ++checked;
  }
  CHECK(checked == 64);
  CHECK(worst < 1e-3);
}
