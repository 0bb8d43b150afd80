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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: hgi-acceptance [GOLDEN_DIR] [criterion...]

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>
#include <string>

#include "dpc_oracle.hpp"
#include "hgi/commands.hpp"
#include "hgi/error.hpp"
#include "hgi/hgit.hpp"
#include "hgi/loss.hpp"
#include "hgi/metrics.hpp"
#include "hgi/model.hpp"
#include "hgi/rtfa.hpp"
#include "hgi/serialize.hpp"
#include "metric_oracle.hpp"
#include "op_cases.hpp"
#include "support.hpp"

using namespace hgi;
using hgi::test::random_tensor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;  // 0: no time limit
  std::function<Outcome()> run;
};

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "hgi_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
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

std::size_t outside_unit(const Tensor& t) {
  std::size_t bad = 0;
  for (double v : t.values())
    if (!(v >= 0.0 && v <= 1.0)) ++bad;
  return bad;
}

Tensor block_mask(std::size_t side) {
  std::vector<double> g(side * side, 0.0);
  for (std::size_t y = side / 3; y < 2 * side / 3; ++y)
    for (std::size_t x = side / 4; x < 2 * side / 3; ++x) g[y * side + x] = 1.0;
  return Tensor({1, 1, side, side}, g);
}

// 1. Density peaks against the exhaustive reference.
Outcome dpc_oracle() {
  std::size_t mismatched = 0;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const auto qp = random_tensor({1, 16, 4}, rng, -0.5, 0.5);
    const auto kp = random_tensor({1, 16, 4}, rng, -0.5, 0.5);
    const auto a = rtfa::region_affinity(qp, kp, 0);
    const std::size_t knn = 1 + rng.below(15);
    const std::size_t k = 1 + rng.below(16);
    const auto st = rtfa::cluster(a, 16, k, knn);
    const auto rho = test::oracle_density(a, 16, 16, knn);
    const auto delta = test::oracle_delta(a, 16, 16, rho);
    const auto top = test::oracle_top_k(rho, delta, k);
    for (std::size_t i = 0; i < 16; ++i)
      worst = std::max({worst, std::fabs(st.rho[i] - rho[i]), std::fabs(st.delta[i] - delta[i])});
    if (st.centers != top) ++mismatched;
  }
  return {mismatched == 0 && worst <= 1e-12,
          fmt::format("1000 instances, {} selection mismatches, max |Δρ|,|Δδ| = {:.3g}",
                      mismatched, worst)};
}

// 2. Every operation and the full model through the loss.
Outcome gradients() {
  double op_worst = 0;
  std::size_t n_ops = 0;
  for (const auto& op : test::op_cases()) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(1000 + seed);
      std::vector<Tensor> leaves;
      for (const auto& s : op.shapes)
        leaves.push_back(op.kinked ? test::away_from_zero(s, rng)
                                   : random_tensor(s, rng, op.lo, op.hi, true));
      const auto w = random_tensor(op.fn(leaves).shape(), rng);
      const auto res = test::grad_check([&] { return sum(mul(op.fn(leaves), w)); }, leaves);
      op_worst = std::max(op_worst, res.max_rel);
    }
    ++n_ops;
  }

  Rng rng(9);
  const auto g = block_mask(16);
  std::array<Tensor, 3> maps{random_tensor({1, 1, 16, 16}, rng, 0.05, 0.95, true),
                             random_tensor({1, 1, 8, 8}, rng, 0.05, 0.95, true),
                             random_tensor({1, 1, 4, 4}, rng, 0.05, 0.95, true)};
  const double loss_worst =
      test::grad_check([&] { return loss::total_loss(maps, g, 0.7); }, {maps[0], maps[1], maps[2]},
                       1e-6)
          .max_rel;

  const auto cfg = ModelConfig::desk();
  model::Model m(cfg);
  const auto x = random_tensor({1, 3, 64, 64}, rng, 0, 1);
  const auto mask = block_mask(64);
  const auto loss = [&] {
    return loss::total_loss(m.forward(x, true).pyramid.refined, mask, cfg.loss_lambda);
  };
  auto params = m.parameters().trainable();
  std::size_t total = 0;
  for (const auto& p : params) total += p.numel();
  m.parameters().zero_grad();
  {
    Tape tape;
    backward(loss());
  }
  double model_worst = 0;
  const double h = 1e-5;
  for (int s = 0; s < 64; ++s) {
    std::size_t flat = rng.below(total), which = 0;
    while (flat >= params[which].numel()) flat -= params[which++].numel();
    auto& p = params[which];
    const double orig = p.values()[flat];
    p.mutable_values()[flat] = orig + h;
    const double up = loss().item();
    p.mutable_values()[flat] = orig - h;
    const double down = loss().item();
    p.mutable_values()[flat] = orig;
    model_worst = std::max(model_worst, test::rel_err(p.grad()[flat], (up - down) / (2 * h)));
  }
  const bool ok = op_worst < 1e-3 && loss_worst < 1e-3 && model_worst < 1e-3;
  return {ok, fmt::format("{} ops x 100 seeds max {:.2e}; loss {:.2e}; desk model "
                          "(64 of {} params) {:.2e}",
                          n_ops, op_worst, loss_worst, total, model_worst)};
}

// 3. Laplacian symmetry and spectrum.
Outcome laplacian_spectrum() {
  double lo = 1e9, hi = -1e9, asym = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const std::size_t c = 1 + rng.below(16);
    const auto l = hgit::laplacian_pe(random_tensor({1, 8, c}, rng, -2, 2));
    Eigen::Matrix<double, 8, 8> mat;
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) mat(i, j) = l.values()[i * 8 + j];
    asym = std::max(asym, (mat - mat.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(mat);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  return {asym == 0.0 && lo >= -1e-9 && hi <= 2.0 + 1e-9,
          fmt::format("1000 matrices, max asymmetry {:.3g}, eigenvalues in [{:.6f}, {:.6f}]", asym,
                      lo, hi)};
}

// 4. Row-stochastic attention/alignment and probability ranges.
Outcome stochasticity() {
  const model::Model m(ModelConfig::desk());
  Rng rng(4);
  double worst = 0;
  std::size_t rows_checked = 0, bad_probs = 0;
  for (int trial = 0; trial < 100; ++trial) {
    model::ForwardTrace trace;
    const auto r = m.forward(random_tensor({1, 3, 64, 64}, rng, 0, 1), false, &trace);
    std::vector<const Tensor*> mats;
    for (const auto& a : trace.backbone.attention) mats.push_back(&a);
    for (const auto& p : trace.pairs) {
      mats.push_back(&p.alignment.forward);
      mats.push_back(&p.alignment.backward);
      for (const auto& a : p.transformer_i.attention) mats.push_back(&a);
      for (const auto& a : p.transformer_j.attention) mats.push_back(&a);
    }
    for (const auto* t : mats) {
      worst = std::max(worst, max_row_error(*t));
      rows_checked += t->numel() / t->shape().back();
    }
    for (std::size_t i = 0; i < 3; ++i)
      bad_probs += outside_unit(r.pyramid.coarse[i]) + outside_unit(r.pyramid.refined[i]);
    bad_probs += outside_unit(r.pyramid.final_map);
  }
  return {worst < 1e-6 && bad_probs == 0,
          fmt::format("100 forwards, {} rows, max |row sum - 1| = {:.2e}, {} map values "
                      "outside [0,1]",
                      rows_checked, worst, bad_probs)};
}

// 5. Residual identities.
Outcome residual_identity() {
  Rng rng(7);
  nn::ParameterStore store;
  nn::ParamFactory f(store, rng);
  hgit::PairOptions opt;
  opt.channels_i = 16;
  opt.channels_j = 32;
  const hgit::Pair pair(f, opt);
  for (const auto& [name, t] : store.entries()) {
    Tensor h = t;
    for (double& v : h.mutable_values()) v = 0.0;
  }
  bool pair_ok = true;
  for (int t = 0; t < 10; ++t) {
    const auto fi = random_tensor({2, 16, 8, 8}, rng), fj = random_tensor({2, 32, 4, 4}, rng);
    const auto out = pair(fi, fj);
    pair_ok = pair_ok && test::bit_equal(out.to_i, fi) && test::bit_equal(out.to_j, fj);
  }
  bool proj_ok = true;
  for (int t = 0; t < 10; ++t) {
    const auto fi = random_tensor({1, 3, 4, 4}, rng);
    hgit::LatentGraph g;
    g.basis = random_tensor({1, 4, 8}, rng);
    g.h = 2;
    g.w = 2;
    nn::Conv2d phi;
    phi.kernel = random_tensor({3, 5, 1, 1}, rng);
    proj_ok = proj_ok &&
              test::bit_equal(hgit::reproject_combine(Tensor::zeros({1, 8, 5}), g, fi, phi), fi);
  }
  return {pair_ok && proj_ok, fmt::format("zeroed pair identity {}, zero-node reprojection {}",
                                         pair_ok ? "bit-exact" : "BROKEN",
                                         proj_ok ? "bit-exact" : "BROKEN")};
}

// 6. Published constants and stage weights.
Outcome constants() {
  const auto c = ModelConfig::desk();
  const bool k_ok = c.cluster_k == std::array<std::size_t, 4>{1, 4, 16, 64};
  const bool rest = c.graph_nodes == 8 && c.hgit_layers == 2 && c.hgit_heads == 8 &&
                    c.loss_lambda == 0.7;
  const auto g = Tensor::zeros({1, 1, 32, 32});
  const std::array<Tensor, 3> half{Tensor::full({1, 1, 32, 32}, 0.5),
                                   Tensor::full({1, 1, 16, 16}, 0.5),
                                   Tensor::full({1, 1, 8, 8}, 0.5)};
  // Every stage loss is exactly 1 here.
  const double stage = loss::stage_loss(half[2], loss::nearest_resize(g, 8, 8), 0.0).item();
  const double total = loss::total_loss(half, g, 0.0).item();
  const bool weights = stage == 1.0 && total == 1.75 * stage;
  return {k_ok && rest && weights,
          fmt::format("k = ({}), N = {}, l = {}, h = {}, λ = {}; total/stage = {} / {}",
                      fmt::join(c.cluster_k, ","), c.graph_nodes, c.hgit_layers, c.hgit_heads,
                      c.loss_lambda, total, stage)};
}

// 7. Metrics against transcription oracles.
Outcome metric_sanity() {
  Rng rng(3);
  double worst = 0;
  bool perfect = true;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> g(64), p(64);
    const double density = rng.uniform(0.1, 0.9);
    for (double& v : g) v = rng.uniform() < density ? 1.0 : 0.0;
    for (double& v : p) v = rng.uniform();
    const metrics::MapView pv{p, 8, 8}, gv{g, 8, 8};
    const auto P = test::oracle::to_grid(p, 8, 8), G = test::oracle::to_grid(g, 8, 8);
    worst = std::max({worst, std::fabs(metrics::s_measure(pv, gv) - test::oracle::s_measure(P, G)),
                      std::fabs(metrics::weighted_f_measure(pv, gv) -
                                test::oracle::weighted_f_measure(P, G)),
                      std::fabs(metrics::mean_e_measure(pv, gv) -
                                test::oracle::mean_e_measure(P, G)),
                      std::fabs(metrics::mae(pv, gv) - test::oracle::mae(P, G))});
    const auto r = metrics::evaluate(gv, gv);
    perfect = perfect && r.s_measure == 1.0 && r.weighted_f == 1.0 && r.mean_e == 1.0 &&
              r.mae == 0.0;
  }
  return {worst < 1e-9 && perfect,
          fmt::format("200 pairs, max oracle deviation {:.2e}, perfect scores {}", worst,
                      perfect ? "exact" : "NOT exact")};
}

// 8. Desk learning check.
Outcome learning() {
  const auto dir = scratch("learning");
  data::SynthSpec spec;
  spec.contrast = 0.1;
  spec.seed = 7;
  cmd::synth(dir / "data", spec, 64, 16);
  RunConfig rc;
  const auto res = cmd::train(rc, dir / "data", dir / "run");
  const auto& l = res.step_loss;
  double first = 0, last = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    first += l[i] / 10;
    last += l[l.size() - 10 + i] / 10;
  }
  const auto val = data::load_split(dir / "data" / "val");
  double fg = 0;
  for (const auto& s : val) {
    double n = 0;
    for (double v : s.mask.values()) n += v;
    fg += n / static_cast<double>(s.mask.numel()) / static_cast<double>(val.size());
  }
  model::Model m(rc.model);
  model::load_checkpoint(m, dir / "run" / "last.hgc");
  const double mae = train::validation_mae(m, val);
  return {l.size() == 300 && last <= 0.5 * first && mae < fg,
          fmt::format("{} steps, loss {:.4f} -> {:.4f} (ratio {:.3f}), val MAE {:.4f} vs "
                      "all-background {:.4f}",
                      l.size(), first, last, last / first, mae, fg)};
}

// 9. Ablation matrix.
Outcome ablations() {
  Rng rng(5);
  const auto x = random_tensor({1, 3, 64, 64}, rng, 0, 1);
  std::size_t built = 0, good = 0;
  for (auto att : {AttentionKind::kRtfa, AttentionKind::kVanilla})
    for (std::size_t pairs = 0; pairs <= 3; ++pairs)
      for (auto dec : {DecoderKind::kCaff, DecoderKind::kFpn}) {
        auto cfg = ModelConfig::desk();
        cfg.attention = att;
        cfg.hgit_pairs = pairs;
        cfg.decoder = dec;
        const model::Model m(cfg);
        ++built;
        const auto r = m.forward(x, false);
        bool ok = r.pyramid.final_map.shape() == Shape{1, 1, 64, 64};
        for (std::size_t i = 0; i < 4; ++i)
          ok = ok && r.stages[i].shape() == Shape{1, cfg.channels[i], cfg.stage_height(i),
                                                  cfg.stage_width(i)};
        for (std::size_t i = 0; i < 3; ++i) {
          const Shape map{1, 1, cfg.stage_height(i), cfg.stage_width(i)};
          ok = ok && r.pyramid.refined[i].shape() == map;
          ok = ok && (dec == DecoderKind::kCaff ? r.pyramid.coarse[i].shape() == map
                                                : !r.pyramid.coarse[i].defined());
        }
        if (ok) ++good;
      }
  return {built == 16 && good == 16,
          fmt::format("{} of {} configurations emit correct shapes", good, built)};
}

// 10. End-to-end determinism and golden files.
Outcome determinism(const fs::path& golden) {
  const auto run = [](const fs::path& dir) {
    data::SynthSpec spec;
    spec.seed = 7;
    cmd::synth(dir / "data", spec, 8, 4);
    RunConfig rc;
    rc.train.steps = 6;
    rc.train.batch_size = 2;
    cmd::train(rc, dir / "data", dir / "run");
    cmd::infer(dir / "run" / "last.hgc", {dir / "data" / "val" / "images"}, dir / "pred", 2);
    const auto csv = cmd::eval(dir / "pred", dir / "data" / "val" / "masks", 2).csv();
    io::write_file(dir / "eval.csv", std::vector<std::uint8_t>(csv.begin(), csv.end()));
  };
  const auto a = scratch("e2e_a"), b = scratch("e2e_b");
  run(a);
  run(b);
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || io::read_file(e.path()) != io::read_file(b / rel)) ++differ;
  }
  const auto report = cmd::golden_verify(golden);
  return {files > 0 && differ == 0 && report.ok(),
          fmt::format("pipeline rerun: {} files, {} differ; golden set {}: {} outputs checked, "
                      "{} mismatched",
                      files, differ, golden.string(), report.checked, report.mismatches.size())};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
#ifdef HGI_GOLDEN_DIR
  fs::path golden = HGI_GOLDEN_DIR;
#else
  fs::path golden = "tests/golden";
#endif
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (!arg.empty() && std::isdigit(static_cast<unsigned char>(arg[0])))
      only.insert(std::stoi(arg));
    else
      golden = arg;
  }

  const std::vector<Criterion> criteria{
      {1, "DPC-KNN oracle equivalence", 10, dpc_oracle},
      {2, "gradient correctness", 300, gradients},
      {3, "Laplacian spectrum", 10, laplacian_spectrum},
      {4, "stochasticity and normalisation", 60, stochasticity},
      {5, "residual identity", 0, residual_identity},
      {6, "published constants", 0, constants},
      {7, "metric sanity", 60, metric_sanity},
      {8, "desk learning check", 1800, learning},
      {9, "ablation shape matrix", 300, ablations},
      {10, "determinism and golden files", 0, [&] { return determinism(golden); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt::format("{:.1f} s", secs);
    if (c.budget_s > 0) {
      timing += fmt::format(" of {:.0f} s", c.budget_s);
      if (secs > c.budget_s) {
        out.pass = false;
        out.detail += "; over time budget";
      }
    }
    if (!out.pass) ++failed;
    fmt::print("{} {:>2} {} [{}]: {}\n", out.pass ? "PASS" : "FAIL", c.id, c.title, timing,
               out.detail);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
