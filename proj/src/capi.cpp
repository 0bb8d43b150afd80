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

#include "hgi/hgi.h"

#include <cstdio>
#include <string>

#include <spdlog/spdlog.h>

#include "hgi/commands.hpp"
#include "hgi/error.hpp"
#include "hgi/serialize.hpp"

struct hgi_model {
  hgi::model::Model model;
};

namespace {

thread_local std::string g_last_error;

hgi_status fail(hgi_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename F>
hgi_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return HGI_OK;
  } catch (const hgi::ConfigError& e) {
    return fail(HGI_ERR_USAGE, e.what());
  } catch (const hgi::ContractError& e) {
    return fail(HGI_ERR_USAGE, e.what());
  } catch (const hgi::NumericError& e) {
    return fail(HGI_ERR_NUMERIC, e.what());
  } catch (const hgi::Error& e) {
    return fail(HGI_ERR_DATA, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(HGI_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(HGI_ERR_DATA, std::string("internal error: ") + e.what());
  }
}

void require(const void* p, const char* what) {
  if (!p) throw hgi::ContractError(std::string(what) + " must not be null");
}

}  // namespace

extern "C" {

const char* hgi_version(void) { return "0.1.0"; }

const char* hgi_last_error(void) { return g_last_error.c_str(); }

hgi_status hgi_set_log_level(int level) {
  return guarded([&] {
    if (level < 0 || level > 6 || level == 5) {
      throw hgi::ConfigError("log level must be 0-4 or 6");
    }
    spdlog::set_level(static_cast<spdlog::level::level_enum>(level));
  });
}

void hgi_synth_defaults(hgi_synth_options* opt) {
  if (!opt) return;
  const hgi::data::SynthSpec spec;
  opt->size = spec.size;
  opt->n_train = 64;
  opt->n_val = 16;
  opt->min_objects = spec.min_objects;
  opt->max_objects = spec.max_objects;
  opt->contrast = spec.contrast;
  opt->seed = spec.seed;
}

hgi_status hgi_synth(const char* out_dir, const hgi_synth_options* opt) {
  return guarded([&] {
    require(out_dir, "out_dir");
    require(opt, "options");
    hgi::data::SynthSpec spec;
    spec.size = opt->size;
    spec.min_objects = opt->min_objects;
    spec.max_objects = opt->max_objects;
    spec.contrast = opt->contrast;
    spec.seed = opt->seed;
    spec.validate();
    hgi::cmd::synth(out_dir, spec, opt->n_train, opt->n_val);
  });
}

hgi_status hgi_train(const char* config_path, const char* data_dir,
                     const char* out_dir, const uint64_t* seed) {
  return guarded([&] {
    require(data_dir, "data_dir");
    require(out_dir, "out_dir");
    hgi::RunConfig cfg = config_path ? hgi::RunConfig::load(config_path)
                                     : hgi::RunConfig{};
    if (seed) cfg.model.seed = *seed;
    const auto res = hgi::cmd::train(cfg, data_dir, out_dir);
    spdlog::info("best val MAE {:.6f} at epoch {}", res.best_val_mae, res.best_epoch);
  });
}

hgi_status hgi_infer(const char* checkpoint, const char* const* inputs,
                     size_t n_inputs, const char* out_dir, size_t jobs) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out_dir, "out_dir");
    if (n_inputs == 0) throw hgi::ConfigError("no input images given");
    require(inputs, "inputs");
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < n_inputs; ++i) {
      require(inputs[i], "input path");
      paths.emplace_back(inputs[i]);
    }
    const auto written = hgi::cmd::infer(checkpoint, paths, out_dir, jobs);
    spdlog::info("wrote {} maps to {}", written.size(), out_dir);
  });
}

hgi_status hgi_eval(const char* pred_dir, const char* gt_dir, const char* csv_path,
                    size_t jobs, hgi_metric_report* mean) {
  return guarded([&] {
    require(pred_dir, "pred_dir");
    require(gt_dir, "gt_dir");
    const auto res = hgi::cmd::eval(pred_dir, gt_dir, jobs);
    const auto text = res.csv();
    if (csv_path) {
      hgi::io::write_file(csv_path, std::vector<std::uint8_t>(text.begin(), text.end()));
    } else {
      std::fwrite(text.data(), 1, text.size(), stdout);
      std::fflush(stdout);
    }
    if (mean) {
      *mean = {res.mean.s_measure, res.mean.weighted_f, res.mean.mean_e, res.mean.mae};
    }
  });
}

hgi_status hgi_golden_regen(const char* dir) {
  return guarded([&] {
    require(dir, "dir");
    hgi::cmd::golden_regen(dir);
  });
}

hgi_status hgi_golden_verify(const char* dir) {
  return guarded([&] {
    require(dir, "dir");
    const auto rep = hgi::cmd::golden_verify(dir);
    if (!rep.ok()) {
      std::string msg = "golden outputs differ:";
      for (const auto& m : rep.mismatches) msg += " " + m;
      throw hgi::DataError(msg);
    }
    spdlog::info("{} golden images reproduce bit-exactly", rep.checked);
  });
}

hgi_status hgi_model_load(const char* checkpoint, hgi_model** out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out, "out");
    *out = nullptr;
    auto* m = new hgi_model{hgi::model::Model(hgi::model::checkpoint_config(checkpoint))};
    try {
      hgi::model::load_checkpoint(m->model, checkpoint);
    } catch (...) {
      delete m;
      throw;
    }
    *out = m;
  });
}

void hgi_model_free(hgi_model* model) { delete model; }

hgi_status hgi_model_input_size(const hgi_model* model, size_t* height, size_t* width) {
  return guarded([&] {
    require(model, "model");
    if (height) *height = model->model.config().input_height;
    if (width) *width = model->model.config().input_width;
  });
}

hgi_status hgi_model_predict(const hgi_model* model, const double* image,
                             size_t height, size_t width, double* out) {
  return guarded([&] {
    require(model, "model");
    require(image, "image");
    require(out, "out");
    if (height == 0 || width == 0) throw hgi::ContractError("empty image");
    hgi::Tensor x({1, 3, height, width},
                  std::vector<double>(image, image + 3 * height * width));
    const hgi::Tensor p = hgi::cmd::predict(model->model, x);
    const auto v = p.values();
    std::copy(v.begin(), v.end(), out);
  });
}

hgi_status hgi_metrics(const double* pred, const double* gt, size_t height,
                       size_t width, hgi_metric_report* out) {
  return guarded([&] {
    require(pred, "pred");
    require(gt, "gt");
    require(out, "out");
    const std::size_t n = height * width;
    const auto r = hgi::metrics::evaluate({{pred, n}, height, width}, {{gt, n}, height, width});
    *out = {r.s_measure, r.weighted_f, r.mean_e, r.mae};
  });
}

}  // extern "C"
