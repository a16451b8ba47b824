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

#include "finalmlp/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "finalmlp/common.hpp"
#include "finalmlp/rng.hpp"

namespace finalmlp {

namespace {

std::vector<std::size_t> pick_coords(std::size_t n, std::size_t cap,
                                     Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (cap == 0 || cap >= n) return idx;
  rng.shuffle(idx);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport check_gradients(const std::vector<Param*>& params,
                                const std::function<double()>& loss,
                                const GradCheckOptions& opts) {
  if (opts.epsilon <= 0.0)
    throw ConfigError("gradcheck: epsilon must be positive");
  GradCheckReport report;
  Rng rng(opts.sample_seed);
  for (Param* p : params) {
    GradCheckEntry entry;
    entry.name = p->name;
    const std::vector<std::size_t> coords =
        pick_coords(p->size(), opts.max_coords_per_param, rng);
    double* w = p->value.data();
    const double* g = p->grad.data();
    for (std::size_t i : coords) {
      const double saved = w[i];
      w[i] = saved + opts.epsilon;
      const double f_plus = loss();
      w[i] = saved - opts.epsilon;
      const double f_minus = loss();
      w[i] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
        throw NumericError("gradcheck: non-finite loss while perturbing '" + p->name + "'");
      const double numeric = (f_plus - f_minus) / (2.0 * opts.epsilon);
      const double analytic = g[i];
      const double denom =
          std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
      const double rel = std::fabs(analytic - numeric) / denom;
      if (rel >= entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_coord = i;
        entry.analytic_at_worst = analytic;
        entry.numeric_at_worst = numeric;
      }
      ++entry.coords_checked;
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace finalmlp
