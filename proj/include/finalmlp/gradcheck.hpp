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
#include <functional>
#include <string>
#include <vector>

#include "finalmlp/matrix.hpp"

namespace finalmlp {

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Cap on coordinates probed per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t sample_seed = 17;
};

struct GradCheckEntry {
  std::string name;
  std::size_t coords_checked = 0;
  double max_rel_err = 0.0;
  std::size_t worst_coord = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool passed(double tol) const { return max_rel_err <= tol; }
};

/// Central-difference check of the gradients currently stored in `params`
/// against the scalar function `loss`, which must evaluate the loss from the
/// parameter values in place (and must not touch the grad buffers).
///
/// Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-6). Large
/// parameters can be subsampled via max_coords_per_param; sampling is
/// deterministic in sample_seed.
GradCheckReport check_gradients(const std::vector<Param*>& params,
                                const std::function<double()>& loss,
                                const GradCheckOptions& opts = {});

}  // namespace finalmlp
