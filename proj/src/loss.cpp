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

#include "finalmlp/loss.hpp"

#include <cmath>
#include <string>

#include "finalmlp/common.hpp"

namespace finalmlp {

BceResult bce_loss(const std::vector<double>& logits, const std::vector<double>& labels) {
  if (logits.size() != labels.size())
    throw ShapeError("bce_loss: logits and labels differ in length");
  if (logits.empty()) throw ShapeError("bce_loss: empty batch");
  const std::size_t n = logits.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  BceResult r;
  r.grad.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = logits[i];
    const double y = labels[i];
    if (!std::isfinite(z))
      throw NumericError("bce_loss: non-finite logit at index " + std::to_string(i));
    if (y != 0.0 && y != 1.0)
      throw DataError("bce_loss: label at index " + std::to_string(i) + " is not 0/1");
    acc += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::fabs(z)));
    r.grad[i] = (sigmoid(z) - y) * inv_n;
  }
  r.loss = acc * inv_n;
  return r;
}

}  // namespace finalmlp
