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

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hgi/config.hpp"
#include "hgi/data.hpp"
#include "hgi/metrics.hpp"
#include "hgi/model.hpp"
#include "hgi/train.hpp"

namespace hgi::cmd {

namespace fs = std::filesystem;

// Caps a requested worker count by HGI_THREADS when it is set; 0 means 1.
std::size_t effective_jobs(std::size_t requested);

// Runs fn(0..n-1) over up to `jobs` threads. The lowest-index failure is
// rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn);

void synth(const fs::path& out_dir, const data::SynthSpec& spec,
           std::size_t n_train, std::size_t n_val);

// Trains on <data>/train, validates on <data>/val (optional), writes
// run.cfg, steps.csv, epochs.csv, best.hgc and last.hgc under out_dir.
train::TrainResult train(const RunConfig& config, const fs::path& data_dir,
                         const fs::path& out_dir);

// Final map for one 1×3×H×W image at its own extents. Images whose size
// differs from the model input are resized there and back bilinearly.
Tensor predict(const model::Model& m, const Tensor& image);

// Collects .ppm/.pgm inputs: directories are scanned (sorted), files kept.
std::vector<fs::path> collect_images(const std::vector<fs::path>& inputs);

// Writes <out_dir>/<stem>.pgm for every input; returns the written paths.
std::vector<fs::path> infer(const fs::path& checkpoint,
                            const std::vector<fs::path>& inputs,
                            const fs::path& out_dir, std::size_t jobs);

struct EvalRow {
  std::string image;
  metrics::MetricReport report;
};

struct EvalResult {
  std::vector<EvalRow> rows;  // sorted by file name
  metrics::MetricReport mean;
  std::string csv() const;
};

// Pairs <pred_dir>/*.pgm with <gt_dir>/*.pgm by stem. Unmatched names in
// either directory abort with a DataError listing them.
EvalResult eval(const fs::path& pred_dir, const fs::path& gt_dir,
                std::size_t jobs);

struct GoldenReport {
  std::size_t checked = 0;
  std::vector<std::string> mismatches;
  bool ok() const { return checked > 0 && mismatches.empty(); }
};

// Golden set layout: model.hgc, images/NNNN.ppm, expected/NNNN.pgm and
// expected/NNNN.hgt (raw final map).
void golden_regen(const fs::path& dir);
GoldenReport golden_verify(const fs::path& dir);

}  // namespace hgi::cmd
