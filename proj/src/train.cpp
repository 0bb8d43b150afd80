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

#include "hgi/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hgi/error.hpp"
#include "hgi/loss.hpp"
#include "hgi/metrics.hpp"

namespace hgi::train {

Adam::Adam(std::vector<Tensor> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

double learning_rate(const TrainConfig& cfg, std::size_t step) {
  const std::size_t every =
      cfg.lr_decay_every ? cfg.lr_decay_every : std::max<std::size_t>(1, cfg.steps / 4);
  return cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(step / every));
}

void recalibrate_batch_norm(model::Model& m, const std::vector<Tensor>& batches) {
  if (batches.empty()) return;
  std::vector<Tensor> stats;
  for (const auto& [name, t] : m.parameters().entries()) {
    if (name.ends_with(".running_mean") || name.ends_with(".running_var")) stats.push_back(t);
  }
  // A training-mode pass normalises with batch statistics and moves each
  // buffer by momentum·(batch value − buffer); from a zero buffer that
  // leaves momentum·(batch value).
  const double momentum = BatchNormState{}.momentum;
  std::vector<std::vector<double>> acc;
  for (const auto& s : stats) acc.emplace_back(s.numel(), 0.0);
  for (const auto& batch : batches) {
    for (auto& s : stats)
      for (double& v : s.mutable_values()) v = 0.0;
    m.forward(batch, true);
    for (std::size_t i = 0; i < stats.size(); ++i) {
      const auto v = stats[i].values();
      for (std::size_t j = 0; j < v.size(); ++j) acc[i][j] += v[j] / momentum;
    }
  }
  const double n = static_cast<double>(batches.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    auto w = stats[i].mutable_values();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = acc[i][j] / n;
  }
}

double validation_mae(const model::Model& m,
                      const std::vector<data::Sample>& samples) {
  if (samples.empty()) throw DataError("validation set is empty");
  double total = 0.0;
  for (const auto& s : samples) {
    auto out = m.forward(s.image, false);
    const auto& p = out.pyramid.final_map;
    const std::size_t h = p.dim(2), w = p.dim(3);
    total += metrics::mae({p.values(), h, w}, {s.mask.values(), h, w});
  }
  return total / static_cast<double>(samples.size());
}

TrainResult fit(model::Model& m, const TrainConfig& cfg,
                const std::vector<data::Sample>& train_set,
                const std::vector<data::Sample>& val_set,
                const TrainOptions& opt) {
  cfg.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  const std::size_t n = train_set.size();
  const std::size_t per_epoch =
      cfg.steps_per_epoch ? cfg.steps_per_epoch : (n + cfg.batch_size - 1) / cfg.batch_size;

  std::ofstream steps_csv, epochs_csv;
  if (!opt.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    steps_csv.open(opt.out_dir / "steps.csv");
    epochs_csv.open(opt.out_dir / "epochs.csv");
    if (!steps_csv || !epochs_csv) {
      throw IoError("cannot write training logs under " + opt.out_dir.string());
    }
    steps_csv << "step,lr,loss\n";
    epochs_csv << "epoch,train_loss,val_mae\n";
  }

  Adam adam(m.parameters().trainable(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng rng(m.config().seed ^ 0x5db3a1c7e9f04d2bULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;

  std::vector<Tensor> recal;
  for (std::size_t start = 0; start < n && recal.size() < cfg.bn_recal_batches;
       start += cfg.batch_size) {
    std::vector<Tensor> imgs;
    for (std::size_t i = start; i < std::min(n, start + cfg.batch_size); ++i)
      imgs.push_back(train_set[i].image);
    recal.push_back(data::stack(imgs));
  }

  TrainResult res;
  double epoch_sum = 0.0;
  std::size_t epoch_steps = 0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (cursor >= n) {
      // Fisher-Yates with the library generator for portability.
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      cursor = 0;
    }
    std::vector<Tensor> imgs, masks;
    for (std::size_t b = 0; b < cfg.batch_size && cursor < n; ++b, ++cursor) {
      imgs.push_back(train_set[order[cursor]].image);
      masks.push_back(train_set[order[cursor]].mask);
    }
    const double lr = learning_rate(cfg, step);
    double value;
    {
      Tape tape;
      auto out = m.forward(data::stack(imgs), true);
      auto l = loss::total_loss(out.pyramid.refined, data::stack(masks),
                                m.config().loss_lambda);
      value = l.item();
      if (!std::isfinite(value)) {
        throw NumericError(fmt::format("non-finite loss {} at step {}", value, step));
      }
      m.parameters().zero_grad();
      backward(l);
    }
    adam.step(lr);
    res.step_loss.push_back(value);
    if (steps_csv) steps_csv << fmt::format("{},{:.6g},{:.9f}\n", step, lr, value);
    if (opt.on_step) opt.on_step(step, value);
    epoch_sum += value;
    ++epoch_steps;

    if ((step + 1) % per_epoch == 0 || step + 1 == cfg.steps) {
      recalibrate_batch_norm(m, recal);
      EpochRecord rec;
      rec.epoch = res.epochs.size();
      rec.last_step = step;
      rec.train_loss = epoch_sum / static_cast<double>(epoch_steps);
      rec.val_mae = val_set.empty() ? 0.0 : validation_mae(m, val_set);
      res.epochs.push_back(rec);
      epoch_sum = 0.0;
      epoch_steps = 0;
      if (val_set.empty())
        spdlog::info("epoch {} step {} train_loss {:.6f}", rec.epoch, step + 1, rec.train_loss);
      else
        spdlog::info("epoch {} step {} train_loss {:.6f} val_mae {:.6f}", rec.epoch, step + 1,
                     rec.train_loss, rec.val_mae);
      if (epochs_csv) {
        epochs_csv << fmt::format("{},{:.9f},{:.9f}\n", rec.epoch, rec.train_loss,
                                  rec.val_mae);
      }
      if (res.epochs.size() == 1 || rec.val_mae < res.best_val_mae) {
        res.best_val_mae = rec.val_mae;
        res.best_epoch = rec.epoch;
        if (!opt.out_dir.empty()) model::save_checkpoint(m, opt.out_dir / "best.hgc");
      }
    }
  }
  if (!opt.out_dir.empty()) model::save_checkpoint(m, opt.out_dir / "last.hgc");
  return res;
}

}  // namespace hgi::train
