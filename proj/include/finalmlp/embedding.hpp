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

#include "finalmlp/data.hpp"
#include "finalmlp/matrix.hpp"
#include "finalmlp/rng.hpp"

namespace finalmlp {

/// Sparse embedding gradient: the unique table rows gathered by a batch, in
/// ascending order, with one packed d-vector per row.
struct EmbeddingGrad {
  std::vector<std::uint32_t> rows;
  Matrix values;  // rows.size() x d

  /// Adds the sparse gradient into a dense total_features x d buffer.
  void add_into(Matrix& dense) const;
};

/// Per-field embedding tables stored as one total_features x d matrix, with
/// field offsets mapping (field, local id) to a global row. offsets_ carries
/// one entry per field plus a final entry holding the total row count.
class Embedding {
 public:
  Embedding(const FeatureSchema& schema, std::size_t dim, std::uint64_t seed);

  /// Row b of the result concatenates the looked-up vectors of all fields of
  /// instance b; output is B x (M*d).
  Matrix forward(const IdMatrix& ids) const;

  /// Gradient of forward: row r accumulates the upstream slices of every
  /// (instance, field) that gathered r. Duplicates within a batch sum.
  EmbeddingGrad backward(const IdMatrix& ids, const Matrix& upstream) const;

  /// Accumulates a sparse gradient into the table's dense gradient buffer.
  void accumulate(const EmbeddingGrad& g) { g.add_into(table.grad); }

  std::size_t dim() const { return dim_; }
  std::size_t field_count() const { return offsets_.size() - 1; }
  std::size_t output_dim() const { return field_count() * dim_; }
  const std::vector<std::uint32_t>& offsets() const { return offsets_; }

  Param table;  // total_features x d, paired with its gradient buffer

 private:
  std::vector<std::uint32_t> offsets_;
  std::size_t dim_;
};

}  // namespace finalmlp
