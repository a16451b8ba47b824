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
#include <string>
#include <vector>

#include "finalmlp/data.hpp"
#include "finalmlp/matrix.hpp"
#include "finalmlp/mlp.hpp"

namespace finalmlp {

enum class GateConditionKind { learned_vector, field_group, field_list };

/// Stream-specific feature selection settings. The gate network maps a
/// condition input to one weight logit per embedding coordinate; the stream
/// input becomes 2*sigmoid(logit) elementwise times the embedding vector.
struct GateConfig {
  GateConditionKind kind = GateConditionKind::learned_vector;
  FieldGroup group = FieldGroup::user;     // read when kind == field_group
  std::vector<std::string> field_names;    // read when kind == field_list
  /// Hidden widths of the gate network (ReLU). Empty means the default of
  /// a single hidden layer as wide as the embedding vector.
  std::vector<std::size_t> hidden;
};

struct GateCache {
  Matrix e;        // gated input, kept for the backward pass
  Matrix weights;  // 2*sigmoid(g); one row when the condition is learned
  MlpCache net;
  bool broadcast = false;
};

/// One stream's gate. The condition is either a learnable vector (shared by
/// every instance) or the embedding slices of selected fields, re-read from
/// e itself; selected-field gradients flow back into those slices.
class FeatureGate {
 public:
  /// `name` prefixes parameter names. Widths derive from schema and
  /// embed_dim; the final gate layer is zero-initialized so the gate starts
  /// as the identity (all weights exactly 1).
  FeatureGate(const std::string& name, const GateConfig& cfg, const FeatureSchema& schema,
              std::size_t embed_dim, std::uint64_t seed);

  /// h = 2*sigmoid(Gate(x)) elementwise* e. With a learned condition the
  /// gate runs once and its weight row applies to every instance.
  Matrix forward(const Matrix& e, GateCache& cache) const;

  /// Returns dL/de, combining the direct elementwise path with, for
  /// field-conditioned gates, the gradient re-entering through the condition
  /// slices. Parameter gradients accumulate in place.
  Matrix backward(GateCache& cache, const Matrix& upstream);

  std::vector<Param*> params();
  std::size_t n_params() const;
  const std::vector<std::size_t>& condition_fields() const { return cond_fields_; }
  std::size_t condition_dim() const { return cond_dim_; }
  bool learned_condition() const { return cfg_.kind == GateConditionKind::learned_vector; }
  Mlp& net() { return net_; }
  Param& condition() { return cond_; }

 private:
  GateConfig cfg_;
  std::vector<std::size_t> cond_fields_;  // field indices, ascending
  std::size_t cond_dim_ = 0;
  std::size_t embed_dim_ = 0;
  std::size_t out_dim_ = 0;
  Param cond_;  // 1 x cond_dim when learned; empty otherwise
  Mlp net_;
};

}  // namespace finalmlp
