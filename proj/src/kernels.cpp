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

#include "finalmlp/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <string>

#include "finalmlp/common.hpp"

namespace finalmlp::kernels {

namespace {

// Four independent accumulators keep IEEE semantics (no -ffast-math needed)
// while exposing enough ILP for the compiler to vectorize.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3)) + tail;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void check_linear_shapes(const Matrix& x, const Matrix& w, const Matrix& bias, const Matrix& y) {
  if (x.cols() != w.cols())
    throw ShapeError("linear_forward: input dim " + std::to_string(x.cols()) +
                     " != weight fan-in " + std::to_string(w.cols()));
  if (y.rows() != x.rows() || y.cols() != w.rows())
    throw ShapeError("linear_forward: bad output shape");
  if (!bias.empty() && (bias.rows() != 1 || bias.cols() != w.rows()))
    throw ShapeError("linear_forward: bias must be 1x" + std::to_string(w.rows()));
}

void check_ids(const IdMatrix& ids, const std::vector<std::uint32_t>& offsets,
               std::size_t table_rows) {
  if (offsets.size() != ids.cols + 1)
    throw ShapeError("embedding: offsets must have one entry per field plus total");
  if (offsets.back() != table_rows)
    throw ShapeError("embedding: offsets total does not match table rows");
  for (std::size_t b = 0; b < ids.rows; ++b) {
    for (std::size_t i = 0; i < ids.cols; ++i) {
      const std::uint32_t id = ids(b, i);
      if (offsets[i] + id >= offsets[i + 1])
        throw ShapeError("embedding: id " + std::to_string(id) + " out of range for field " +
                         std::to_string(i) + " (instance " + std::to_string(b) + ")");
    }
  }
}

struct ScatterEntry {
  std::uint32_t row;
  std::uint32_t src;  // b * M + i
};

}  // namespace

void linear_forward(const Matrix& x, const Matrix& w, const Matrix& bias, Matrix& y) {
  check_linear_shapes(x, w, bias, y);
  const std::size_t rows = x.rows(), out = w.rows(), in = w.cols();
  const bool has_bias = !bias.empty();
#pragma omp parallel for schedule(static) if (rows * out * in > 16384)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(rows); ++b) {
    const double* xb = x.row(b);
    double* yb = y.row(b);
    for (std::size_t o = 0; o < out; ++o) {
      const double base = has_bias ? bias[o] : 0.0;
      yb[o] = base + dot(xb, w.row(o), in);
    }
  }
}

void linear_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
  if (dy.cols() != w.rows() || dx.cols() != w.cols() || dx.rows() != dy.rows())
    throw ShapeError("linear_backward_input: shape mismatch");
  const std::size_t rows = dy.rows(), out = w.rows(), in = w.cols();
#pragma omp parallel for schedule(static) if (rows * out * in > 16384)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(rows); ++b) {
    const double* dyb = dy.row(b);
    double* dxb = dx.row(b);
    std::fill(dxb, dxb + in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      if (dyb[o] != 0.0) axpy(dyb[o], w.row(o), dxb, in);
    }
  }
}

void linear_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, Matrix& db) {
  if (dy.rows() != x.rows() || dw.rows() != dy.cols() || dw.cols() != x.cols() ||
      db.rows() != 1 || db.cols() != dy.cols())
    throw ShapeError("linear_backward_params: shape mismatch");
  const std::size_t rows = dy.rows(), out = dw.rows(), in = dw.cols();
#pragma omp parallel for schedule(static) if (rows * out * in > 16384)
  for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(out); ++o) {
    double* dwo = dw.row(o);
    double bsum = 0.0;
    for (std::size_t b = 0; b < rows; ++b) {
      const double g = dy(b, o);
      bsum += g;
      if (g != 0.0) axpy(g, x.row(b), dwo, in);
    }
    db[o] += bsum;
  }
}

void relu(const Matrix& x, Matrix& y) {
  if (!x.same_shape(y)) throw ShapeError("relu: shape mismatch");
  const std::size_t n = x.size();
  const double* in = x.data();
  double* out = y.data();
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const Matrix& dy, const Matrix& pre, Matrix& dx) {
  if (!dy.same_shape(pre) || !dy.same_shape(dx)) throw ShapeError("relu_backward: shape mismatch");
  const std::size_t n = dy.size();
  const double* g = dy.data();
  const double* p = pre.data();
  double* out = dx.data();
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[i] = p[i] > 0.0 ? g[i] : 0.0;
}

void hadamard(const Matrix& a, const Matrix& b, Matrix& out) {
  if (!a.same_shape(b) || !a.same_shape(out)) throw ShapeError("hadamard: shape mismatch");
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
#pragma omp parallel for schedule(static) if (n > 65536)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) po[i] = pa[i] * pb[i];
}

void embedding_gather(const Matrix& table, const IdMatrix& ids,
                      const std::vector<std::uint32_t>& offsets, Matrix& out) {
  check_ids(ids, offsets, table.rows());
  const std::size_t d = table.cols();
  if (out.rows() != ids.rows || out.cols() != ids.cols * d)
    throw ShapeError("embedding_gather: bad output shape");
#pragma omp parallel for schedule(static) if (ids.rows * ids.cols > 1024)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(ids.rows); ++b) {
    double* ob = out.row(b);
    for (std::size_t i = 0; i < ids.cols; ++i) {
      const double* src = table.row(offsets[i] + ids(b, i));
      std::copy(src, src + d, ob + i * d);
    }
  }
}

void embedding_scatter_add(const Matrix& upstream, const IdMatrix& ids,
                           const std::vector<std::uint32_t>& offsets, Matrix& grad) {
  check_ids(ids, offsets, grad.rows());
  const std::size_t d = grad.cols();
  if (upstream.rows() != ids.rows || upstream.cols() != ids.cols * d)
    throw ShapeError("embedding_scatter_add: bad upstream shape");

  // Group gathered rows so each destination row is owned by one thread; the
  // per-row accumulation order stays (batch, field), matching the serial
  // reference bit for bit.
  std::vector<ScatterEntry> entries(ids.rows * ids.cols);
  for (std::size_t b = 0; b < ids.rows; ++b)
    for (std::size_t i = 0; i < ids.cols; ++i) {
      const std::size_t s = b * ids.cols + i;
      entries[s] = {offsets[i] + ids(b, i), static_cast<std::uint32_t>(s)};
    }
  std::sort(entries.begin(), entries.end(), [](const ScatterEntry& a, const ScatterEntry& b) {
    return a.row != b.row ? a.row < b.row : a.src < b.src;
  });

  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (i == 0 || entries[i].row != entries[i - 1].row) starts.push_back(i);
  starts.push_back(entries.size());
  const std::size_t n_segments = starts.size() - 1;

#pragma omp parallel for schedule(static) if (n_segments > 256)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n_segments); ++s) {
    for (std::size_t e = starts[s]; e < starts[s + 1]; ++e) {
      const std::size_t b = entries[e].src / ids.cols;
      const std::size_t i = entries[e].src % ids.cols;
      axpy(1.0, upstream.row(b) + i * d, grad.row(entries[e].row), d);
    }
  }
}

namespace serial {

void linear_forward(const Matrix& x, const Matrix& w, const Matrix& bias, Matrix& y) {
  check_linear_shapes(x, w, bias, y);
  for (std::size_t b = 0; b < x.rows(); ++b)
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const double base = bias.empty() ? 0.0 : bias[o];
      y(b, o) = base + dot(x.row(b), w.row(o), w.cols());
    }
}

void linear_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
  if (dy.cols() != w.rows() || dx.cols() != w.cols() || dx.rows() != dy.rows())
    throw ShapeError("linear_backward_input: shape mismatch");
  dx.zero();
  for (std::size_t b = 0; b < dy.rows(); ++b)
    for (std::size_t o = 0; o < w.rows(); ++o)
      for (std::size_t i = 0; i < w.cols(); ++i) dx(b, i) += dy(b, o) * w(o, i);
}

void linear_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, Matrix& db) {
  if (dy.rows() != x.rows() || dw.rows() != dy.cols() || dw.cols() != x.cols() ||
      db.rows() != 1 || db.cols() != dy.cols())
    throw ShapeError("linear_backward_params: shape mismatch");
  for (std::size_t o = 0; o < dw.rows(); ++o)
    for (std::size_t b = 0; b < dy.rows(); ++b) {
      db[o] += dy(b, o);
      for (std::size_t i = 0; i < dw.cols(); ++i) dw(o, i) += dy(b, o) * x(b, i);
    }
}

void relu(const Matrix& x, Matrix& y) {
  if (!x.same_shape(y)) throw ShapeError("relu: shape mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const Matrix& dy, const Matrix& pre, Matrix& dx) {
  if (!dy.same_shape(pre) || !dy.same_shape(dx)) throw ShapeError("relu_backward: shape mismatch");
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = pre[i] > 0.0 ? dy[i] : 0.0;
}

void hadamard(const Matrix& a, const Matrix& b, Matrix& out) {
  if (!a.same_shape(b) || !a.same_shape(out)) throw ShapeError("hadamard: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
}

void embedding_gather(const Matrix& table, const IdMatrix& ids,
                      const std::vector<std::uint32_t>& offsets, Matrix& out) {
  check_ids(ids, offsets, table.rows());
  const std::size_t d = table.cols();
  if (out.rows() != ids.rows || out.cols() != ids.cols * d)
    throw ShapeError("embedding_gather: bad output shape");
  for (std::size_t b = 0; b < ids.rows; ++b)
    for (std::size_t i = 0; i < ids.cols; ++i)
      for (std::size_t j = 0; j < d; ++j) out(b, i * d + j) = table(offsets[i] + ids(b, i), j);
}

void embedding_scatter_add(const Matrix& upstream, const IdMatrix& ids,
                           const std::vector<std::uint32_t>& offsets, Matrix& grad) {
  check_ids(ids, offsets, grad.rows());
  const std::size_t d = grad.cols();
  if (upstream.rows() != ids.rows || upstream.cols() != ids.cols * d)
    throw ShapeError("embedding_scatter_add: bad upstream shape");
  for (std::size_t b = 0; b < ids.rows; ++b)
    for (std::size_t i = 0; i < ids.cols; ++i)
      for (std::size_t j = 0; j < d; ++j) grad(offsets[i] + ids(b, i), j) += upstream(b, i * d + j);
}

}  // namespace serial

}  // namespace finalmlp::kernels
