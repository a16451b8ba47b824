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

// Compares the OpenMP kernels against their serial references: median
// wall time over repeated runs, plus a bitwise equality check on the
// outputs (the parallel kernels promise identical results, not just close
// ones).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "finalmlp/kernels.hpp"
#include "finalmlp/matrix.hpp"
#include "finalmlp/rng.hpp"

using namespace finalmlp;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Matrix m(r, c);
  Rng rng(seed);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-1.0, 1.0);
  return m;
}

double median_ms(const std::function<void()>& fn, int reps) {
  std::vector<double> t(reps);
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
               .count();
  }
  std::sort(t.begin(), t.end());
  return t[reps / 2];
}

int failures = 0;

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-28s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   %s\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "bitwise-identical" : "MISMATCH");
  if (!identical) ++failures;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; both columns run serially\n\n");
#endif
  const int reps = 7;

  {
    const std::size_t b = 1024, in = 400, out = 400;
    const Matrix x = random_matrix(b, in, 1);
    const Matrix w = random_matrix(out, in, 2);
    const Matrix bias = random_matrix(1, out, 3);
    Matrix ys(b, out), yp(b, out);
    const double ts = median_ms([&] { kernels::serial::linear_forward(x, w, bias, ys); }, reps);
    const double tp = median_ms([&] { kernels::linear_forward(x, w, bias, yp); }, reps);
    report("linear_forward", ts, tp, ys == yp);

    Matrix dxs(b, in), dxp(b, in);
    const Matrix dy = random_matrix(b, out, 4);
    const double ts2 =
        median_ms([&] { kernels::serial::linear_backward_input(dy, w, dxs); }, reps);
    const double tp2 = median_ms([&] { kernels::linear_backward_input(dy, w, dxp); }, reps);
    report("linear_backward_input", ts2, tp2, dxs == dxp);

    Matrix dws(out, in), dbs(1, out), dwp(out, in), dbp(1, out);
    const double ts3 = median_ms(
        [&] {
          dws.zero();
          dbs.zero();
          kernels::serial::linear_backward_params(dy, x, dws, dbs);
        },
        reps);
    const double tp3 = median_ms(
        [&] {
          dwp.zero();
          dbp.zero();
          kernels::linear_backward_params(dy, x, dwp, dbp);
        },
        reps);
    report("linear_backward_params", ts3, tp3, dws == dwp && dbs == dbp);
  }

  {
    const std::size_t b = 4096, cols = 4096;
    const Matrix a = random_matrix(b, cols, 5);
    const Matrix c = random_matrix(b, cols, 6);
    Matrix os(b, cols), op(b, cols);
    const double ts = median_ms([&] { kernels::serial::hadamard(a, c, os); }, reps);
    const double tp = median_ms([&] { kernels::hadamard(a, c, op); }, reps);
    report("hadamard", ts, tp, os == op);

    Matrix rs(b, cols), rp(b, cols);
    const double ts2 = median_ms([&] { kernels::serial::relu(a, rs); }, reps);
    const double tp2 = median_ms([&] { kernels::relu(a, rp); }, reps);
    report("relu", ts2, tp2, rs == rp);
  }

  {
    const std::size_t b = 4096, fields = 20, d = 16, vocab = 1000;
    std::vector<std::uint32_t> offsets(fields + 1);
    for (std::size_t f = 0; f <= fields; ++f)
      offsets[f] = static_cast<std::uint32_t>(f * vocab);
    const Matrix table = random_matrix(fields * vocab, d, 7);
    IdMatrix ids(b, fields);
    Rng rng(8);
    for (auto& id : ids.v) id = static_cast<std::uint32_t>(rng.below(vocab));

    Matrix es(b, fields * d), ep(b, fields * d);
    const double ts =
        median_ms([&] { kernels::serial::embedding_gather(table, ids, offsets, es); }, reps);
    const double tp = median_ms([&] { kernels::embedding_gather(table, ids, offsets, ep); }, reps);
    report("embedding_gather", ts, tp, es == ep);

    const Matrix up = random_matrix(b, fields * d, 9);
    Matrix gs(fields * vocab, d), gp(fields * vocab, d);
    const double ts2 = median_ms(
        [&] {
          gs.zero();
          kernels::serial::embedding_scatter_add(up, ids, offsets, gs);
        },
        reps);
    const double tp2 = median_ms(
        [&] {
          gp.zero();
          kernels::embedding_scatter_add(up, ids, offsets, gp);
        },
        reps);
    report("embedding_scatter_add", ts2, tp2, gs == gp);
  }

  if (failures) {
    std::printf("\n%d kernel(s) diverged from the serial reference\n", failures);
    return 1;
  }
  return 0;
}
