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

#include <vector>

namespace finalmlp {

struct BceResult {
  double loss = 0.0;
  std::vector<double> grad;  // dL/dlogit, already divided by batch size
};

/// Mean binary cross-entropy over logits, evaluated in the overflow-safe
/// logit form max(z,0) - y*z + log1p(exp(-|z|)). Labels must be exactly 0
/// or 1. Throws NumericError on a non-finite logit.
BceResult bce_loss(const std::vector<double>& logits, const std::vector<double>& labels);

}  // namespace finalmlp
