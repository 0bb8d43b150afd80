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

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hgi/hgi.h"

namespace {

int report(hgi_status st) {
  if (st != HGI_OK) std::fprintf(stderr, "hgi: %s\n", hgi_last_error());
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camouflaged object detection with hierarchical graph interaction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hgi_version()));
  int log_level = 2;
  app.add_option("--log-level", log_level, "0 trace .. 4 error, 6 off")
      ->check(CLI::Range(0, 6));

  std::string config, out, data, checkpoint;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::vector<std::string> inputs;
  hgi_synth_options synth_opt;
  hgi_synth_defaults(&synth_opt);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic camouflage data set");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--seed", synth_opt.seed, "Generator seed");
  synth->add_option("--train", synth_opt.n_train, "Training pairs");
  synth->add_option("--val", synth_opt.n_val, "Validation pairs");
  synth->add_option("--size", synth_opt.size, "Image side in pixels");
  synth->add_option("--contrast", synth_opt.contrast, "Object intensity offset")
      ->check(CLI::Range(0.0, 0.2));

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config, "Run configuration")->check(CLI::ExistingFile);
  train->add_option("--data", data, "Data set directory")->required();
  train->add_option("--out", out, "Run directory")->required();
  train->add_option("--seed", seed, "Model seed override");

  auto* infer = app.add_subcommand("infer", "Write prediction maps");
  infer->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  infer->add_option("--out", out, "Output directory")->required();
  infer->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  infer->add_option("inputs", inputs, "Images or directories")->required();

  std::string csv, gt;
  auto* eval = app.add_subcommand("eval", "Score prediction maps against masks");
  eval->add_option("--data", data, "Prediction directory")->required();
  eval->add_option("--gt", gt, "Ground-truth directory")->required();
  eval->add_option("--out", csv, "CSV file (default stdout)");
  eval->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string golden_dir = "tests/golden";
  auto* golden = app.add_subcommand("golden", "Regenerate or verify golden files");
  golden->require_subcommand(1);
  auto* regen = golden->add_subcommand("regen", "Rewrite the golden set");
  auto* verify = golden->add_subcommand("verify", "Check the golden set bit-exactly");
  for (auto* sub : {regen, verify}) sub->add_option("--out", golden_dir, "Golden directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : HGI_ERR_USAGE;
  }
  if (hgi_set_log_level(log_level) != HGI_OK) return report(HGI_ERR_USAGE);

  if (*synth) return report(hgi_synth(out.c_str(), &synth_opt));
  if (*train) {
    return report(hgi_train(config.empty() ? nullptr : config.c_str(), data.c_str(),
                            out.c_str(), seed ? &*seed : nullptr));
  }
  if (*infer) {
    std::vector<const char*> ptrs;
    for (const auto& s : inputs) ptrs.push_back(s.c_str());
    return report(hgi_infer(checkpoint.c_str(), ptrs.data(), ptrs.size(), out.c_str(), jobs));
  }
  if (*eval) {
    return report(hgi_eval(data.c_str(), gt.c_str(), csv.empty() ? nullptr : csv.c_str(),
                           jobs, nullptr));
  }
  if (*regen) return report(hgi_golden_regen(golden_dir.c_str()));
  if (*verify) return report(hgi_golden_verify(golden_dir.c_str()));
  return HGI_ERR_USAGE;
}
