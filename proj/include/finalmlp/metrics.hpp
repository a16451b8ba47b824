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
#include <vector>

namespace finalmlp {

/// AUC as an exact rational: value = num2 / (2*den), den = n_pos*n_neg.
/// num2 counts correctly ordered positive-negative pairs twice and tied
/// pairs once, so every tie-averaged rank sum stays in integer arithmetic.
/// Exact identities (pairwise equivalence, monotone invariance, label-swap
/// num2 -> 2*den - num2) are statements about these integers; the double
/// value is their single correctly rounded quotient.
struct AucFraction {
  std::uint64_t num2 = 0;
  std::uint64_t den = 0;

  double value() const { return static_cast<double>(num2) / (2.0 * static_cast<double>(den)); }
};

/// Rank-based AUC with average ranks for ties. Labels must be 0/1 with both
/// classes present (single-class input throws DataError: AUC is undefined).
AucFraction auc_fraction(const std::vector<double>& scores, const std::vector<double>& labels);

double auc(const std::vector<double>& scores, const std::vector<double>& labels);

/// Mean binary cross-entropy of probability scores, clamped to
/// [1e-7, 1 - 1e-7] so exact 0/1 scores stay finite.
double logloss(const std::vector<double>& scores, const std::vector<double>& labels);

}  // namespace finalmlp
