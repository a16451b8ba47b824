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

namespace finalmlp {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter registry. Moment tensors
/// mirror parameter shapes; the step counter is shared.
class Adam {
 public:
  Adam(const std::vector<Param*>& params, const AdamConfig& cfg);

  /// One update from the gradients currently held in each Param. Throws
  /// NumericError naming the parameter on a non-finite gradient.
  void step();

  /// Zeroes every gradient buffer in the registry.
  void zero_grads();

  std::uint64_t t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Param*> params_;
  AdamConfig cfg_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t t_ = 0;
};

}  // namespace finalmlp
