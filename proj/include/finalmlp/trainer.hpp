/*
 * Copyright (c) 2026, finalmlp-cpp contributors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "finalmlp/adam.hpp"
#include "finalmlp/data.hpp"
#include "finalmlp/model.hpp"

namespace finalmlp {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// L2 penalty weight on embedding rows; applied per batch to the rows the
  /// batch actually touched.
  double embedding_l2 = 0.0;
  std::size_t batch_size = 4096;
  std::size_t max_epochs = 20;
  /// Consecutive epochs without a validation-AUC improvement tolerated
  /// before stopping. 0 stops at the first non-improving epoch.
  std::size_t patience = 2;
};

struct EpochRow {
  std::size_t epoch = 0;       // 1-based
  double train_loss = 0.0;     // mean training BCE over the epoch's instances
  double val_auc = 0.0;
  double val_logloss = 0.0;
  double wall_time = 0.0;      // seconds spent in this epoch
};

struct TrainResult {
  std::vector<EpochRow> history;
  std::size_t best_epoch = 0;  // 1-based; the restored snapshot
  double best_val_auc = 0.0;
  bool stopped_early = false;
};

struct EvalReport {
  double auc = 0.0;
  double logloss = 0.0;
  std::size_t n_instances = 0;
  std::size_t n_parameters = 0;
  std::vector<std::pair<std::string, std::size_t>> component_params;
  double wall_seconds = 0.0;
};

/// Adds lambda * sum_r ||W_r||^2 over the given rows to the embedding
/// gradient (2 * lambda * W_r per row) and returns the penalty value.
double apply_embedding_l2(Embedding& emb, const std::vector<std::uint32_t>& rows, double lambda);

/// Eval-mode probabilities for a whole dataset, in instance order.
std::vector<double> predict_dataset(const Model& model, const EncodedDataset& data,
                                    std::size_t batch_size);

EvalReport evaluate(const Model& model, const EncodedDataset& data, std::size_t batch_size);

/// Runs the full loop: shuffled mini-batches, Adam, per-epoch validation
/// AUC, early stopping with best-snapshot restore. Deterministic for a fixed
/// seed. Non-finite training loss aborts with the epoch and batch index.
/// `on_epoch`, when set, fires after each epoch in order.
TrainResult train(Model& model, const EncodedDataset& train_set, const EncodedDataset& valid_set,
                  const TrainConfig& tc, std::uint64_t seed,
                  const std::function<void(const EpochRow&)>& on_epoch = {});

}  // namespace finalmlp
