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

#include "finalmlp/trainer.hpp"

#include <chrono>
#include <cmath>

#include "finalmlp/common.hpp"
#include "finalmlp/loss.hpp"
#include "finalmlp/metrics.hpp"

namespace finalmlp {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

IdMatrix slice_ids(const EncodedDataset& data, std::size_t begin, std::size_t end) {
  IdMatrix ids(end - begin, data.n_fields);
  for (std::size_t i = begin; i < end; ++i) {
    const std::uint32_t* src = data.row(i);
    for (std::size_t f = 0; f < data.n_fields; ++f) ids(i - begin, f) = src[f];
  }
  return ids;
}

}  // namespace

double apply_embedding_l2(Embedding& emb, const std::vector<std::uint32_t>& rows, double lambda) {
  if (lambda == 0.0) return 0.0;
  const std::size_t d = emb.dim();
  double penalty = 0.0;
  for (std::uint32_t r : rows) {
    const double* w = emb.table.value.row(r);
    double* g = emb.table.grad.row(r);
    for (std::size_t t = 0; t < d; ++t) {
      penalty += w[t] * w[t];
      g[t] += 2.0 * lambda * w[t];
    }
  }
  return lambda * penalty;
}

std::vector<double> predict_dataset(const Model& model, const EncodedDataset& data,
                                    std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("predict: batch_size must be positive");
  std::vector<double> scores;
  scores.reserve(data.n());
  for (std::size_t begin = 0; begin < data.n(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, data.n());
    const IdMatrix ids = slice_ids(data, begin, end);
    const std::vector<double> p = model.predict(ids);
    scores.insert(scores.end(), p.begin(), p.end());
  }
  return scores;
}

EvalReport evaluate(const Model& model, const EncodedDataset& data, std::size_t batch_size) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> scores = predict_dataset(model, data, batch_size);
  std::vector<double> labels(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) labels[i] = data.labels[i];

  EvalReport r;
  r.auc = auc(scores, labels);
  r.logloss = logloss(scores, labels);
  r.n_instances = data.n();
  // param_counts needs a mutable model only for registry plumbing elsewhere;
  // counting is read-only.
  r.component_params = model.param_counts();
  r.n_parameters = 0;
  for (const auto& [name, count] : r.component_params) r.n_parameters += count;
  r.wall_seconds = seconds_since(t0);
  return r;
}

TrainResult train(Model& model, const EncodedDataset& train_set, const EncodedDataset& valid_set,
                  const TrainConfig& tc, std::uint64_t seed,
                  const std::function<void(const EpochRow&)>& on_epoch) {
  if (train_set.n() == 0) throw DataError("train: empty training set");
  if (valid_set.n() == 0) throw DataError("train: empty validation set");
  if (tc.batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (tc.max_epochs == 0) throw ConfigError("train: max_epochs must be positive");

  AdamConfig ac;
  ac.lr = tc.lr;
  ac.beta1 = tc.beta1;
  ac.beta2 = tc.beta2;
  ac.epsilon = tc.epsilon;
  std::vector<Param*> params = model.params();
  Adam opt(params, ac);

  const std::uint64_t shuffle_seed = mix_seed(seed, "shuffle");
  const std::uint64_t dropout_base = mix_seed(seed, "dropout");

  TrainResult result;
  std::vector<Matrix> best_values;
  std::size_t bad_epochs = 0;

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    BatchStream stream(train_set, tc.batch_size, shuffle_seed, epoch);
    Batch batch;
    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t batch_idx = 0;
    while (stream.next(batch)) {
      ModelCache cache;
      const std::uint64_t drop_seed =
          mix_seed(dropout_base, (static_cast<std::uint64_t>(epoch) << 32) | batch_idx);
      const std::vector<double> logits = model.forward(batch.ids, Mode::train, drop_seed, cache);
      BceResult bce;
      try {
        bce = bce_loss(logits, batch.labels);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_idx) + ": " + e.what());
      }
      opt.zero_grads();
      const EmbeddingGrad eg = model.backward(cache, bce.grad);
      apply_embedding_l2(model.embedding(), eg.rows, tc.embedding_l2);
      opt.step();
      loss_sum += bce.loss * static_cast<double>(batch.labels.size());
      seen += batch.labels.size();
      ++batch_idx;
    }

    const EvalReport val = evaluate(model, valid_set, tc.batch_size);
    EpochRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(seen);
    row.val_auc = val.auc;
    row.val_logloss = val.logloss;
    row.wall_time = seconds_since(t0);
    result.history.push_back(row);
    if (on_epoch) on_epoch(row);

    if (result.best_epoch == 0 || row.val_auc > result.best_val_auc) {
      result.best_epoch = epoch;
      result.best_val_auc = row.val_auc;
      best_values.clear();
      for (const Param* p : params) best_values.push_back(p->value);
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs > tc.patience) {
        result.stopped_early = true;
        break;
      }
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  return result;
}

}  // namespace finalmlp
