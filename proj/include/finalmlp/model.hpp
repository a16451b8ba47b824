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
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "finalmlp/data.hpp"
#include "finalmlp/embedding.hpp"
#include "finalmlp/fusion.hpp"
#include "finalmlp/gating.hpp"
#include "finalmlp/mlp.hpp"

namespace finalmlp {

/// FinalMLP is the full model (feature gates + bilinear fusion); the others
/// are its ablations and the classic baselines. -sum/-concat/-ewp keep the
/// gates but swap the fusion; -noFS drops the gates but keeps bilinear;
/// DualMLP is two plain streams with concat-linear fusion; MLP is a single
/// stream with a linear head.
enum class Variant {
  FinalMLP,
  DualMLP,
  MLP,
  FinalMLP_noFS,
  FinalMLP_sum,
  FinalMLP_concat,
  FinalMLP_ewp,
};

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Hidden widths of one stream; every layer is ReLU with the given dropout.
struct StreamSpec {
  std::vector<std::size_t> widths{400, 400, 400};
  double dropout = 0.0;
};

struct ModelConfig {
  Variant variant = Variant::FinalMLP;
  std::size_t embed_dim = 10;
  StreamSpec stream1;
  StreamSpec stream2;
  GateConfig gate1;
  GateConfig gate2;
  /// Read when the variant is FinalMLP or FinalMLP-noFS; the other variants
  /// fix their fusion kind themselves.
  FusionSpec fusion{FusionKind::bilinear, 1};
  std::uint64_t seed = 0;
};

/// The fusion actually built for a variant.
FusionSpec effective_fusion(const ModelConfig& cfg);

struct ModelCache {
  Mode mode = Mode::eval;
  IdMatrix ids;
  Matrix e;
  GateCache gate1;
  GateCache gate2;
  MlpCache s1;
  MlpCache s2;
  FusionCache fuse;
};

/// Variant-dispatched pipeline: embedding, optional per-stream gating, one
/// or two MLP streams, fusion to a logit. Parameter tensors keep the same
/// names across variants, so shared tensors initialize identically for any
/// fixed seed.
class Model {
 public:
  Model(const ModelConfig& cfg, const FeatureSchema& schema);

  std::vector<double> forward(const IdMatrix& ids, Mode mode, std::uint64_t dropout_seed,
                              ModelCache& cache) const;

  /// Accumulates every parameter gradient; returns the batch's sparse
  /// embedding gradient (already folded into the dense table gradient) so
  /// callers can see which rows were touched.
  EmbeddingGrad backward(ModelCache& cache, const std::vector<double>& dlogits);

  /// Eval-mode probabilities, sigmoid applied.
  std::vector<double> predict(const IdMatrix& ids) const;

  /// Fixed registry order: embedding, gate1, gate2, stream1, stream2, fusion.
  std::vector<Param*> params();
  std::size_t n_params() const;
  std::vector<std::pair<std::string, std::size_t>> param_counts() const;

  const ModelConfig& config() const { return cfg_; }
  bool has_gates() const { return gate1_ != nullptr; }
  bool two_streams() const { return stream2_ != nullptr; }
  Embedding& embedding() { return embed_; }
  Mlp& stream1() { return stream1_; }
  Mlp& stream2() { return *stream2_; }
  FeatureGate& gate1() { return *gate1_; }
  FeatureGate& gate2() { return *gate2_; }
  Fusion& fusion() { return *fusion_; }

 private:
  ModelConfig cfg_;
  Embedding embed_;
  std::unique_ptr<FeatureGate> gate1_;
  std::unique_ptr<FeatureGate> gate2_;
  Mlp stream1_;
  std::unique_ptr<Mlp> stream2_;
  std::unique_ptr<Fusion> fusion_;
};

}  // namespace finalmlp
