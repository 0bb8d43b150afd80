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
#include <fstream>
#include <sstream>

#include "hgi/commands.hpp"
#include "hgi/error.hpp"
#include "hgi/serialize.hpp"
#include "hgi/train.hpp"

using namespace hgi;
namespace fs = std::filesystem;

namespace {

std::vector<data::Sample> samples(std::size_t n, std::uint64_t seed) {
  data::SynthSpec spec;
  spec.seed = seed;
  std::vector<data::Sample> out;
  std::size_t i = 0;
  for (auto& p : data::synth_generate(spec, n))
    out.push_back({"s" + std::to_string(i++), p.image, p.mask});
  return out;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("Adam matches the closed-form recurrence") {
  Tensor w({2}, {1.0, -2.0}, true);
  train::Adam adam({w}, 0.9, 0.999, 1e-8);
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {1.0, -2.0};
  for (int t = 1; t <= 25; ++t) {
    w.zero_grad();
    {
      Tape tape;
      backward(sum(mul(w, w)));
    }
    adam.step(0.05);
    for (int i = 0; i < 2; ++i) {
      const double g = 2 * x[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      x[i] -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(w.values()[0] == doctest::Approx(x[0]).epsilon(1e-14));
    CHECK(w.values()[1] == doctest::Approx(x[1]).epsilon(1e-14));
  }
  CHECK(adam.steps() == 25);
  // First step moves each coordinate by lr regardless of gradient scale.
  Tensor u({1}, {3.0}, true);
  train::Adam a2({u}, 0.9, 0.999, 1e-8);
  {
    Tape tape;
    backward(mul_scalar(sum(u), 1e4));
  }
  a2.step(0.01);
  CHECK(u.values()[0] == doctest::Approx(2.99).epsilon(1e-9));
}

TEST_CASE("step decay schedule") {
  TrainConfig c;
  c.learning_rate = 1e-4;
  c.lr_decay = 0.1;
  c.steps = 400;
  c.lr_decay_every = 0;
  CHECK(train::learning_rate(c, 0) == 1e-4);
  CHECK(train::learning_rate(c, 99) == 1e-4);
  CHECK(train::learning_rate(c, 100) == doctest::Approx(1e-5).epsilon(1e-14));
  CHECK(train::learning_rate(c, 399) == doctest::Approx(1e-7).epsilon(1e-14));
  c.lr_decay_every = 25250;
  CHECK(train::learning_rate(c, 25249) == 1e-4);
  CHECK(train::learning_rate(c, 25250) == doctest::Approx(1e-5).epsilon(1e-14));

  // Shipped desk defaults hold the rate for the whole 300-step run.
  const TrainConfig desk;
  CHECK(train::learning_rate(desk, 299) == desk.learning_rate);
}

TEST_CASE("fit is deterministic and logs every step") {
  auto cfg = ModelConfig::desk();
  TrainConfig tc;
  tc.steps = 5;
  tc.batch_size = 2;
  const auto tr = samples(5, 21), val = samples(2, 22);

  const auto dir = fs::temp_directory_path() / "hgi_test_train";
  fs::remove_all(dir);
  model::Model a(cfg), b(cfg);
  std::vector<std::size_t> seen;
  train::TrainOptions opt;
  opt.out_dir = dir;
  opt.on_step = [&](std::size_t s, double) { seen.push_back(s); };
  const auto ra = train::fit(a, tc, tr, val, opt);
  const auto rb = train::fit(b, tc, tr, val);

  REQUIRE(ra.step_loss.size() == 5);
  CHECK(ra.step_loss == rb.step_loss);
  CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3, 4});
  for (double l : ra.step_loss) CHECK(std::isfinite(l));
  // ⌈5 / 2⌉ = 3 steps per epoch: epochs end after steps 3 and 5.
  REQUIRE(ra.epochs.size() == 2);
  CHECK(ra.epochs[0].last_step == 2);
  CHECK(ra.epochs[1].last_step == 4);
  CHECK(ra.epochs[0].train_loss ==
        doctest::Approx((ra.step_loss[0] + ra.step_loss[1] + ra.step_loss[2]) / 3));
  CHECK(ra.epochs[1].val_mae == doctest::Approx(train::validation_mae(a, val)).epsilon(1e-15));
  CHECK(ra.best_val_mae == std::min(ra.epochs[0].val_mae, ra.epochs[1].val_mae));

  CHECK(line_count(dir / "steps.csv") == 6);
  CHECK(line_count(dir / "epochs.csv") == 3);
  std::ifstream head(dir / "steps.csv");
  std::string first;
  std::getline(head, first);
  CHECK(first == "step,lr,loss");
  CHECK(fs::exists(dir / "best.hgc"));
  CHECK(fs::exists(dir / "last.hgc"));

  model::Model c(cfg);
  model::load_checkpoint(c, dir / "last.hgc");
  for (const auto& [name, t] : a.parameters().entries()) {
    const auto x = t.values(), y = c.parameters().get(name).values();
    CHECK(std::equal(x.begin(), x.end(), y.begin()));
  }
}

TEST_CASE("non-finite loss aborts naming the step") {
  model::Model m(ModelConfig::desk());
  TrainConfig tc;
  tc.steps = 6;
  tc.batch_size = 1;
  tc.learning_rate = 1e200;
  try {
    train::fit(m, tc, samples(2, 23), {});
    FAIL("training did not abort");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("non-finite loss") != std::string::npos);
    CHECK(msg.find("at step") != std::string::npos);
  }
}

TEST_CASE("train command checks its dataset") {
  const auto dir = fs::temp_directory_path() / "hgi_test_train_cmd";
  fs::remove_all(dir);
  data::SynthSpec spec;
  spec.size = 32;
  cmd::synth(dir / "data", spec, 2, 1);
  RunConfig rc;
  rc.train.steps = 1;
  CHECK_THROWS_AS(cmd::train(rc, dir / "data", dir / "run"), DataError);
  CHECK_THROWS_AS(cmd::train(rc, dir / "missing", dir / "run"), DataError);

  auto desk = spec;
  desk.size = 64;
  fs::remove_all(dir / "data");
  cmd::synth(dir / "data", desk, 2, 1);
  rc.train.batch_size = 2;
  const auto res = cmd::train(rc, dir / "data", dir / "run");
  CHECK(res.step_loss.size() == 1);
  const auto saved = RunConfig::load((dir / "run" / "run.cfg").string());
  CHECK(saved.model == rc.model);
  CHECK(saved.train == rc.train);
}

TEST_CASE("BatchNorm recalibration averages per-batch statistics") {
  const auto tr = samples(3, 24);
  const Tensor b1 = tr[0].image, b2 = data::stack({tr[1].image, tr[2].image});
  const auto buffers = [](const model::Model& m) {
    std::vector<std::vector<double>> out;
    for (const auto& [name, t] : m.parameters().entries())
      if (name.ends_with(".running_mean") || name.ends_with(".running_var"))
        out.emplace_back(t.values().begin(), t.values().end());
    return out;
  };
  model::Model m(ModelConfig::desk());
  train::recalibrate_batch_norm(m, {b1});
  const auto s1 = buffers(m);
  train::recalibrate_batch_norm(m, {b2});
  const auto s2 = buffers(m);
  REQUIRE(!s1.empty());

  // Prior running statistics do not matter.
  for (const auto& [name, t] : m.parameters().entries())
    if (name.ends_with(".running_var")) {
      Tensor h = t;
      for (double& v : h.mutable_values()) v = 123.0;
    }
  train::recalibrate_batch_norm(m, {b2});
  CHECK(buffers(m) == s2);

  train::recalibrate_batch_norm(m, {b1, b2});
  const auto both = buffers(m);
  double worst = 0;
  bool positive = true;
  for (std::size_t i = 0; i < both.size(); ++i)
    for (std::size_t j = 0; j < both[i].size(); ++j) {
      worst = std::max(worst, std::fabs(both[i][j] - 0.5 * (s1[i][j] + s2[i][j])));
      if (i % 2 == 1) positive = positive && both[i][j] > 0.0;
    }
  CHECK(worst < 1e-12);
  CHECK(positive);
}
