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

#include "hgi/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "hgi/error.hpp"
#include "hgi/pixmap.hpp"
#include "hgi/serialize.hpp"

namespace hgi::cmd {

std::size_t effective_jobs(std::size_t requested) {
  std::size_t jobs = std::max<std::size_t>(1, requested);
  if (const char* env = std::getenv("HGI_THREADS")) {
    char* end = nullptr;
    const unsigned long long cap = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) {
      jobs = std::min<std::size_t>(jobs, cap);
    } else {
      spdlog::warn("ignoring HGI_THREADS={} (expected a positive integer)", env);
    }
  }
  return jobs;
}

void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(1, jobs), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void synth(const fs::path& out_dir, const data::SynthSpec& spec,
           std::size_t n_train, std::size_t n_val) {
  if (n_train == 0) throw ConfigError("synth: need at least one training pair");
  data::synth_write(out_dir, spec, n_train, n_val);
  spdlog::info("wrote {} train and {} val pairs to {}", n_train, n_val,
               out_dir.string());
}

namespace {

void check_extents(const std::vector<data::Sample>& set, const ModelConfig& mc,
                   const fs::path& where) {
  for (const auto& s : set) {
    if (s.image.dim(2) != mc.input_height || s.image.dim(3) != mc.input_width) {
      throw DataError(fmt::format("{}/{}: image is {}x{}, model input is {}x{}",
                                  where.string(), s.name, s.image.dim(3),
                                  s.image.dim(2), mc.input_width, mc.input_height));
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  io::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace

train::TrainResult train(const RunConfig& config, const fs::path& data_dir,
                         const fs::path& out_dir) {
  config.model.validate();
  config.train.validate();
  const auto train_set = data::load_split(data_dir / "train");
  std::vector<data::Sample> val_set;
  if (fs::is_directory(data_dir / "val")) val_set = data::load_split(data_dir / "val");
  check_extents(train_set, config.model, data_dir / "train");
  check_extents(val_set, config.model, data_dir / "val");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  write_text(out_dir / "run.cfg", config.to_text());

  model::Model m(config.model);
  spdlog::info("training {} parameters on {} pairs ({} val)",
               m.parameters().trainable_count(), train_set.size(), val_set.size());
  train::TrainOptions opt;
  opt.out_dir = out_dir;
  return train::fit(m, config.train, train_set, val_set, opt);
}

Tensor predict(const model::Model& m, const Tensor& image) {
  const auto& mc = m.config();
  const std::size_t h = image.dim(2), w = image.dim(3);
  const bool resize = h != mc.input_height || w != mc.input_width;
  const Tensor x = resize ? bilinear_resize(image, mc.input_height, mc.input_width)
                          : image;
  Tensor p = m.forward(x, false).pyramid.final_map;
  if (resize) p = clamp(bilinear_resize(p, h, w), 0.0, 1.0);
  return p;
}

std::vector<fs::path> collect_images(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) {
          found.push_back(e.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      out.push_back(in);
    } else {
      throw DataError("no such image: " + in.string());
    }
  }
  if (out.empty()) throw DataError("no input images");
  return out;
}

std::vector<fs::path> infer(const fs::path& checkpoint,
                            const std::vector<fs::path>& inputs,
                            const fs::path& out_dir, std::size_t jobs) {
  model::Model m(model::checkpoint_config(checkpoint));
  model::load_checkpoint(m, checkpoint);
  const auto images = collect_images(inputs);
  std::map<std::string, fs::path> seen;
  std::vector<fs::path> outputs;
  for (const auto& p : images) {
    const auto name = p.stem().string() + ".pgm";
    if (!seen.emplace(name, p).second) {
      throw DataError("inputs " + seen[name].string() + " and " + p.string() +
                      " would both write " + name);
    }
    outputs.push_back(out_dir / name);
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  parallel_for(images.size(), effective_jobs(jobs), [&](std::size_t i) {
    const Tensor p = predict(m, io::image_tensor(io::read_pnm(images[i])));
    io::write_pnm(outputs[i], io::gray_from_map(p.values(), p.dim(2), p.dim(3)));
  });
  return outputs;
}

std::string EvalResult::csv() const {
  std::string out = "image,s_measure,weighted_f,mean_e,mae\n";
  auto line = [&](const std::string& name, const metrics::MetricReport& r) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f}\n", name, r.s_measure,
                       r.weighted_f, r.mean_e, r.mae);
  };
  for (const auto& row : rows) line(row.image, row.report);
  line("mean", mean);
  return out;
}

namespace {

std::map<std::string, fs::path> gray_maps(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") {
      out[e.path().stem().string()] = e.path();
    }
  }
  return out;
}

}  // namespace

EvalResult eval(const fs::path& pred_dir, const fs::path& gt_dir,
                std::size_t jobs) {
  const auto preds = gray_maps(pred_dir), gts = gray_maps(gt_dir);
  std::vector<std::string> unmatched;
  for (const auto& [k, v] : preds)
    if (!gts.count(k)) unmatched.push_back(v.string());
  for (const auto& [k, v] : gts)
    if (!preds.count(k)) unmatched.push_back(v.string());
  if (!unmatched.empty()) {
    throw DataError(fmt::format("unmatched files: {}", fmt::join(unmatched, ", ")));
  }
  if (preds.empty()) throw DataError("no .pgm maps in " + pred_dir.string());

  EvalResult res;
  for (const auto& [k, v] : preds) res.rows.push_back({k, {}});
  std::vector<char> thresholded(res.rows.size(), 0);
  parallel_for(res.rows.size(), effective_jobs(jobs), [&](std::size_t i) {
    const auto& name = res.rows[i].image;
    const auto pred = io::read_pnm(preds.at(name));
    const auto gt = io::read_pnm(gts.at(name));
    if (pred.channels != 1) throw DataError(preds.at(name).string() + " is not gray");
    if (pred.width != gt.width || pred.height != gt.height) {
      throw DataError(fmt::format("{}: prediction is {}x{}, ground truth {}x{}", name,
                                  pred.width, pred.height, gt.width, gt.height));
    }
    bool odd = false;
    const Tensor g = io::mask_tensor(gt, &odd);
    thresholded[i] = odd;
    std::vector<double> p(pred.pixels.size());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = pred.pixels[j] / 255.0;
    res.rows[i].report = metrics::evaluate({p, pred.height, pred.width},
                                           {g.values(), gt.height, gt.width});
  });
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    if (thresholded[i]) {
      spdlog::warn("{}: ground truth is not strictly binary; thresholded at 128",
                   res.rows[i].image);
    }
  }
  double s = 0, f = 0, e = 0, a = 0;
  for (const auto& row : res.rows) {
    s += row.report.s_measure;
    f += row.report.weighted_f;
    e += row.report.mean_e;
    a += row.report.mae;
  }
  const double n = static_cast<double>(res.rows.size());
  res.mean = {s / n, f / n, e / n, a / n};
  return res;
}

namespace {

constexpr std::size_t kGoldenImages = 4;
constexpr std::uint64_t kGoldenSeed = 11;

std::string golden_stem(std::size_t i) { return fmt::format("{:04d}", i); }

}  // namespace

void golden_regen(const fs::path& dir) {
  std::error_code ec;
  for (const char* sub : {"images", "expected"}) fs::create_directories(dir / sub, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  // A briefly trained model exercises non-trivial weights.
  data::SynthSpec spec;
  spec.seed = kGoldenSeed;
  auto pairs = data::synth_generate(spec, 8 + kGoldenImages);
  std::vector<data::Sample> train_set;
  for (std::size_t i = 0; i < 8; ++i) {
    train_set.push_back({golden_stem(i), pairs[i].image, pairs[i].mask});
  }
  model::Model m(ModelConfig::desk());
  TrainConfig tc;
  tc.steps = 4;
  train::fit(m, tc, train_set, {});
  model::save_checkpoint(m, dir / "model.hgc");

  for (std::size_t i = 0; i < kGoldenImages; ++i) {
    const auto& s = pairs[8 + i];
    const fs::path img = dir / "images" / (golden_stem(i) + ".ppm");
    io::write_pnm(img, io::rgb_from_planes(s.image.values(), s.image.dim(2),
                                           s.image.dim(3)));
  }
  // Expected outputs come from a freshly loaded checkpoint, as in verify.
  model::Model loaded(model::checkpoint_config(dir / "model.hgc"));
  model::load_checkpoint(loaded, dir / "model.hgc");
  for (std::size_t i = 0; i < kGoldenImages; ++i) {
    const auto stem = golden_stem(i);
    const Tensor p =
        predict(loaded, io::image_tensor(io::read_pnm(dir / "images" / (stem + ".ppm"))));
    io::save_tensor(p, dir / "expected" / (stem + ".hgt"));
    io::write_pnm(dir / "expected" / (stem + ".pgm"),
                  io::gray_from_map(p.values(), p.dim(2), p.dim(3)));
  }
}

GoldenReport golden_verify(const fs::path& dir) {
  model::Model m(model::checkpoint_config(dir / "model.hgc"));
  model::load_checkpoint(m, dir / "model.hgc");
  GoldenReport rep;
  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(dir / "images")) {
    if (e.path().extension() == ".ppm") images.push_back(e.path());
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw DataError("no golden images under " + dir.string());
  for (const auto& img : images) {
    const auto stem = img.stem().string();
    const Tensor p = predict(m, io::image_tensor(io::read_pnm(img)));
    const auto raw = io::encode_tensor(p);
    const auto gray = io::encode_pnm(io::gray_from_map(p.values(), p.dim(2), p.dim(3)));
    if (raw != io::read_file(dir / "expected" / (stem + ".hgt"))) {
      rep.mismatches.push_back(stem + ".hgt");
    }
    if (gray != io::read_file(dir / "expected" / (stem + ".pgm"))) {
      rep.mismatches.push_back(stem + ".pgm");
    }
    ++rep.checked;
  }
  return rep;
}

}  // namespace hgi::cmd
