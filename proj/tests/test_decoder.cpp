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

#include "hgi/decoder.hpp"
#include "hgi/error.hpp"
#include "support.hpp"

using namespace hgi;
using namespace hgi::decoder;
using hgi::test::random_tensor;

namespace {

struct Inputs {
  std::array<Tensor, 3> to_i, to_j;
};

// Stage sides 16, 8, 4, 2 with the given channels.
Inputs make_inputs(Rng& rng, const std::array<std::size_t, 4>& c, std::size_t b,
                   std::size_t side = 16, bool grad = false) {
  Inputs in;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t s = side >> i;
    in.to_i[i] = random_tensor({b, c[i], s, s}, rng, -1, 1, grad);
    in.to_j[i] = random_tensor({b, c[i + 1], s / 2, s / 2}, rng, -1, 1, grad);
  }
  return in;
}

void set_all(nn::ParameterStore& store, const std::string& prefix, double v) {
  for (const auto& [name, t] : store.entries()) {
    if (name.rfind(prefix, 0) != 0) continue;
    Tensor h = t;
    for (double& x : h.mutable_values()) x = v;
  }
}

bool in_unit(const Tensor& t) {
  for (double v : t.values())
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

}  // namespace

TEST_CASE("ambiguity indicator examples") {
  const auto a = ambiguity_indicator(Tensor({4}, {0.5, 0.0, 1.0, 0.9}));
  CHECK(a.values()[0] == 0.25);
  CHECK(a.values()[1] == 0.0);
  CHECK(a.values()[2] == 0.0);
  CHECK(a.values()[3] == doctest::Approx(0.09).epsilon(1e-15));
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double p = rng.uniform();
    CHECK(ambiguity_indicator(Tensor({1}, {p})).item() <= 0.25);
  }
}

TEST_CASE("ambiguity reweighting") {
  Rng rng(2);
  const auto fc = random_tensor({2, 3, 4, 4}, rng);
  nn::Conv2d ident;
  ident.kernel = Tensor({1, 1, 1, 1}, {1.0});
  ident.padding = 0;

  // Confident pixels are untouched.
  std::vector<double> pv(32);
  for (std::size_t i = 0; i < 32; ++i) pv[i] = (i % 3) ? 1.0 : 0.0;
  const Tensor p({2, 1, 4, 4}, pv);
  CHECK(test::bit_equal(ambiguity_reweight(fc, p, ident), fc));

  nn::Conv2d zero;
  zero.kernel = Tensor::zeros({1, 1, 3, 3});
  zero.bias = Tensor::zeros({1});
  zero.padding = 1;
  const auto pr = random_tensor({2, 1, 4, 4}, rng, 0, 1);
  CHECK(test::bit_equal(ambiguity_reweight(fc, pr, zero), fc));

  // F^H = F^C·(1 + w·p(1−p) + b) with a 1×1 conv.
  nn::Conv2d scale;
  scale.kernel = Tensor({1, 1, 1, 1}, {3.0});
  scale.bias = Tensor({1}, {0.5});
  const auto fh = ambiguity_reweight(fc, pr, scale);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x) {
          const double q = pr.at({b, 0, y, x});
          const double e = fc.at({b, c, y, x}) * (3.0 * q * (1 - q) + 0.5) + fc.at({b, c, y, x});
          CHECK(fh.at({b, c, y, x}) == doctest::Approx(e).epsilon(1e-14));
        }
}

TEST_CASE("decoder pyramid shapes and ranges") {
  for (auto variant : {Variant::kCaff, Variant::kFpn}) {
    Rng rng(3);
    nn::ParameterStore store;
    nn::ParamFactory f(store, rng);
    DecoderOptions opt;
    opt.channels = {8, 16, 32, 64};
    opt.variant = variant;
    const Decoder dec(f, opt);
    const auto in = make_inputs(rng, opt.channels, 2);
    for (bool training : {true, false}) {
      const auto p = dec(in.to_i, in.to_j, 64, 64, training);
      for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t s = 16 >> i;
        CHECK(p.concatenated[i].shape() == Shape{2, opt.channels[i], s, s});
        CHECK(p.reweighted[i].shape() == p.concatenated[i].shape());
        CHECK(p.fused[i].shape() == p.concatenated[i].shape());
        CHECK(p.refined[i].shape() == Shape{2, 1, s, s});
        CHECK(in_unit(p.refined[i]));
        if (variant == Variant::kCaff) {
          CHECK(p.coarse[i].shape() == Shape{2, 1, s, s});
          for (double v : p.coarse[i].values()) CHECK((v > 0.0 && v < 1.0));
        } else {
          CHECK(!p.coarse[i].defined());
          CHECK(test::bit_equal(p.reweighted[i], p.concatenated[i]));
        }
      }
      CHECK(p.fused[2].same_storage(p.reweighted[2]));
      CHECK(p.final_map.shape() == Shape{2, 1, 64, 64});
      CHECK(in_unit(p.final_map));
      CHECK(test::bit_equal(p.final_map, bilinear_resize(p.refined[0], 64, 64)));
    }
  }
}

TEST_CASE("zero coarse convolutions give P = 0.5") {
  Rng rng(4);
  nn::ParameterStore store;
  nn::ParamFactory f(store, rng);
  DecoderOptions opt;
  opt.channels = {4, 8, 8, 16};
  const Decoder dec(f, opt);
  for (const char* name : {"coarse1.", "coarse2.", "coarse3."}) set_all(store, name, 0.0);
  const auto in = make_inputs(rng, opt.channels, 1);
  const auto p = dec(in.to_i, in.to_j, 16, 16, false);
  for (const auto& c : p.coarse)
    for (double v : c.values()) CHECK(v == 0.5);
}

TEST_CASE("all-zero features give refined maps of 0.5") {
  for (auto variant : {Variant::kCaff, Variant::kFpn}) {
    Rng rng(5);
    nn::ParameterStore store;
    nn::ParamFactory f(store, rng);
    DecoderOptions opt;
    opt.channels = {4, 8, 8, 16};
    opt.variant = variant;
    const Decoder dec(f, opt);
    Inputs in;
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t s = 16 >> i;
      in.to_i[i] = Tensor::zeros({1, opt.channels[i], s, s});
      in.to_j[i] = Tensor::zeros({1, opt.channels[i + 1], s / 2, s / 2});
    }
    const auto p = dec(in.to_i, in.to_j, 16, 16, false);
    for (const auto& r : p.refined)
      for (double v : r.values()) CHECK(v == 0.5);
  }
}

TEST_CASE("decoder rejects mismatched stage features") {
  Rng rng(6);
  nn::ParameterStore store;
  nn::ParamFactory f(store, rng);
  DecoderOptions opt;
  opt.channels = {4, 8, 8, 16};
  const Decoder dec(f, opt);
  auto in = make_inputs(rng, opt.channels, 1);
  in.to_i[1] = Tensor::zeros({1, 5, 8, 8});
  CHECK_THROWS_AS(dec(in.to_i, in.to_j, 16, 16, false), DimensionError);
}

TEST_CASE("decoder gradients match central differences") {
  for (auto variant : {Variant::kCaff, Variant::kFpn}) {
    Rng rng(7);
    nn::ParameterStore store;
    nn::ParamFactory f(store, rng);
    DecoderOptions opt;
    opt.channels = {2, 4, 4, 4};
    opt.head_layers = 1;
    opt.variant = variant;
    const Decoder dec(f, opt);
    for (auto& t : store.trainable())
      for (double& v : t.mutable_values()) v += rng.uniform(-0.3, 0.3);
    auto in = make_inputs(rng, opt.channels, 2, 8, true);
    std::vector<Tensor> leaves = store.trainable();
    for (std::size_t i = 0; i < 3; ++i) {
      leaves.push_back(in.to_i[i]);
      leaves.push_back(in.to_j[i]);
    }
    const auto w = random_tensor({2, 1, 8, 8}, rng);
    const auto res = test::grad_check(
        [&] {
          const auto p = dec(in.to_i, in.to_j, 8, 8, true);
          return add(sum(mul(p.refined[0], w)),
                     add(sum(p.refined[1]), mul_scalar(sum(p.refined[2]), 0.5)));
        },
        leaves, 1e-5, 4);
    INFO("variant " << (variant == Variant::kCaff ? "caff" : "fpn"));
    CHECK(res.max_rel < 1e-3);
  }
}
