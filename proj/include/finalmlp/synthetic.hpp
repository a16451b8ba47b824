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

#include "finalmlp/data.hpp"

namespace finalmlp {

/// Multiplicative-interaction task: every (field, token) carries a latent
/// factor vector z, every field pair (i, j) a fixed random mixing matrix
/// A_ij; an instance's log-odds is the sum over field pairs of z_i' A_ij z_j,
/// and the label is a Bernoulli draw at that probability. The per-pair mixing
/// keeps the quadratic form from collapsing into a function of the summed
/// latent vector, so a model must genuinely capture products of features to
/// score well here; the ceiling (scoring with the generator's own logit) is
/// reported alongside.
struct SyntheticSpec {
  std::size_t n = 50000;
  std::size_t n_fields = 8;
  std::size_t vocab_per_field = 40;
  std::size_t latent_dim = 3;
  /// Scale of the latent factors. 1.25 puts the generator's own scoring
  /// ceiling near 0.99 AUC at the default sizes, leaving a learnable but
  /// demanding target.
  double latent_scale = 1.25;
  std::uint64_t seed = 7;
};

struct SyntheticData {
  FeatureSchema schema;
  EncodedDataset data;
  std::vector<double> true_logits;  // generator log-odds per instance
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

/// Group assignment the generator gives field i (user/item/context cycling),
/// so a schema rebuilt from the generator's text output can match.
FieldGroup synthetic_field_group(std::size_t field_index);

/// Same instances as raw comma-separated text (token strings + label column)
/// for exercising the file-based pipeline. Tokens are zero-padded so the
/// rebuilt vocabulary reproduces the generator's ids.
void write_synthetic_csv(const std::string& path, const SyntheticSpec& spec);

}  // namespace finalmlp
