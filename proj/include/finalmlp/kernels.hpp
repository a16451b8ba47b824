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

#include "finalmlp/matrix.hpp"

namespace finalmlp::kernels {

// OpenMP-parallel kernels for the dense inner loops of the engine. Every
// kernel writes each output element from exactly one thread with a fixed
// serial reduction order, so results are identical for any thread count.
// The kernels::serial namespace keeps single-threaded reference
// implementations with the same per-element arithmetic (so outputs are
// bitwise comparable); tests check the parallel versions against them and
// the bench_kernels target compares their throughput. Independent
// naive-order oracles live at the module level in the test suites.

/// y = x * w^T (+ bias broadcast per row when bias is non-empty).
/// x: B x in, w: out x in, bias: 1 x out, y: B x out.
void linear_forward(const Matrix& x, const Matrix& w, const Matrix& bias, Matrix& y);

/// dx = dy * w.  dy: B x out, w: out x in, dx: B x in.
void linear_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);

/// dw += dy^T * x and db += column sums of dy (batch-summed gradients).
void linear_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, Matrix& db);

/// y = max(x, 0), elementwise.
void relu(const Matrix& x, Matrix& y);

/// dx = dy where pre > 0 else 0.
void relu_backward(const Matrix& dy, const Matrix& pre, Matrix& dx);

/// out = a .* b, elementwise.
void hadamard(const Matrix& a, const Matrix& b, Matrix& out);

/// Gathers embedding rows: out row b is the concatenation over fields i of
/// table.row(offsets[i] + ids(b, i)). table: total x d, out: B x (M*d).
/// Throws ShapeError when an id falls outside its field's range.
void embedding_gather(const Matrix& table, const IdMatrix& ids,
                      const std::vector<std::uint32_t>& offsets, Matrix& out);

/// Adjoint of embedding_gather. Accumulates upstream slices into
/// grad.row(offsets[i] + ids(b, i)); duplicate rows within the batch sum in
/// (batch, field) order regardless of thread count.
void embedding_scatter_add(const Matrix& upstream, const IdMatrix& ids,
                           const std::vector<std::uint32_t>& offsets, Matrix& grad);

namespace serial {

void linear_forward(const Matrix& x, const Matrix& w, const Matrix& bias, Matrix& y);
void linear_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);
void linear_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, Matrix& db);
void relu(const Matrix& x, Matrix& y);
void relu_backward(const Matrix& dy, const Matrix& pre, Matrix& dx);
void hadamard(const Matrix& a, const Matrix& b, Matrix& out);
void embedding_gather(const Matrix& table, const IdMatrix& ids,
                      const std::vector<std::uint32_t>& offsets, Matrix& out);
void embedding_scatter_add(const Matrix& upstream, const IdMatrix& ids,
                           const std::vector<std::uint32_t>& offsets, Matrix& grad);

}  // namespace serial

}  // namespace finalmlp::kernels
