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

#include "finalmlp/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "finalmlp/common.hpp"
#include "finalmlp/kernels.hpp"

namespace finalmlp {

void EmbeddingGrad::add_into(Matrix& dense) const {
  const std::size_t d = values.cols();
  if (dense.cols() != d) throw ShapeError("EmbeddingGrad: dimension mismatch");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double* dst = dense.row(rows[i]);
    const double* src = values.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
  }
}

Embedding::Embedding(const FeatureSchema& schema, std::size_t dim, std::uint64_t seed)
    : offsets_(schema.field_offsets()), dim_(dim) {
  if (dim_ == 0) throw ConfigError("embedding_dim must be >= 1");
  const std::size_t total = schema.total_features();
  table = Param("embedding.table", total, dim_);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim_));
  Rng rng(mix_seed(seed, table.name));
  for (std::size_t i = 0; i < table.value.size(); ++i)
    table.value[i] = rng.uniform(-bound, bound);
}

Matrix Embedding::forward(const IdMatrix& ids) const {
  if (ids.cols != field_count()) throw ShapeError("embed forward: wrong field count");
  Matrix out(ids.rows, output_dim());
  kernels::embedding_gather(table.value, ids, offsets_, out);
  return out;
}

EmbeddingGrad Embedding::backward(const IdMatrix& ids, const Matrix& upstream) const {
  if (ids.cols != field_count()) throw ShapeError("embed backward: wrong field count");
  if (upstream.rows() != ids.rows || upstream.cols() != output_dim())
    throw ShapeError("embed backward: upstream shape mismatch");

  // Unique touched rows, ascending.
  std::vector<std::uint32_t> touched(ids.v.size());
  for (std::size_t b = 0; b < ids.rows; ++b)
    for (std::size_t i = 0; i < ids.cols; ++i)
      touched[b * ids.cols + i] = offsets_[i] + ids(b, i);
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  // Scatter into a compact matrix indexed by touched-row rank. Reuses the
  // deterministic scatter kernel with remapped ids in a single fake field.
  EmbeddingGrad grad;
  grad.rows = std::move(touched);
  grad.values = Matrix(grad.rows.size(), dim_);

  IdMatrix compact(ids.rows * ids.cols, 1);
  for (std::size_t b = 0; b < ids.rows; ++b)
    for (std::size_t i = 0; i < ids.cols; ++i) {
      const std::uint32_t global = offsets_[i] + ids(b, i);
      const auto it = std::lower_bound(grad.rows.begin(), grad.rows.end(), global);
      compact(b * ids.cols + i, 0) = static_cast<std::uint32_t>(it - grad.rows.begin());
    }
  const std::vector<std::uint32_t> compact_offsets = {
      0, static_cast<std::uint32_t>(grad.rows.size())};

  // Upstream reinterpreted as (B*M) x d: slice (b,i) sits at row b*M+i.
  Matrix flat(ids.rows * ids.cols, dim_);
  std::copy(upstream.data(), upstream.data() + upstream.size(), flat.data());
  kernels::embedding_scatter_add(flat, compact, compact_offsets, grad.values);
  return grad;
}

}  // namespace finalmlp
