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

#include "finalmlp/adam.hpp"

#include <cmath>

#include "finalmlp/common.hpp"

namespace finalmlp {

Adam::Adam(const std::vector<Param*>& params, const AdamConfig& cfg)
    : params_(params), cfg_(cfg) {
  if (cfg_.lr <= 0.0) throw ConfigError("adam: lr must be positive");
  if (cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0)
    throw ConfigError("adam: beta1 must lie in [0, 1)");
  if (cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0)
    throw ConfigError("adam: beta2 must lie in [0, 1)");
  if (cfg_.epsilon <= 0.0) throw ConfigError("adam: epsilon must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Param* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols(), 0.0);
    v_.emplace_back(p->value.rows(), p->value.cols(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Param& p = *params_[k];
    double* w = p.value.data();
    const double* g = p.grad.data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(g[i]))
        throw NumericError("adam: non-finite gradient in parameter '" +
                           p.name + "'");
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

void Adam::zero_grads() {
  for (Param* p : params_) p->grad.zero();
}

}  // namespace finalmlp
