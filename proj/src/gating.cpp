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

#include "finalmlp/gating.hpp"

#include <algorithm>
#include <cmath>

#include "finalmlp/common.hpp"
#include "finalmlp/rng.hpp"

namespace finalmlp {

FeatureGate::FeatureGate(const std::string& name, const GateConfig& cfg,
                         const FeatureSchema& schema, std::size_t embed_dim,
                         std::uint64_t seed)
    : cfg_(cfg), embed_dim_(embed_dim) {
  const std::size_t n_fields = schema.field_count();
  out_dim_ = n_fields * embed_dim_;
  if (out_dim_ == 0) throw ConfigError("gate '" + name + "': empty schema or zero embed dim");

  switch (cfg_.kind) {
    case GateConditionKind::learned_vector:
      cond_dim_ = out_dim_;
      break;
    case GateConditionKind::field_group:
      cond_fields_ = schema.fields_in_group(cfg_.group);
      if (cond_fields_.empty())
        throw ConfigError("gate '" + name + "': field group '" +
                          std::string(to_string(cfg_.group)) + "' selects no fields");
      cond_dim_ = cond_fields_.size() * embed_dim_;
      break;
    case GateConditionKind::field_list: {
      if (cfg_.field_names.empty())
        throw ConfigError("gate '" + name + "': empty condition field list");
      for (const std::string& f : cfg_.field_names)
        cond_fields_.push_back(schema.field_index(f));
      std::sort(cond_fields_.begin(), cond_fields_.end());
      if (std::adjacent_find(cond_fields_.begin(), cond_fields_.end()) != cond_fields_.end())
        throw ConfigError("gate '" + name + "': duplicate condition field");
      cond_dim_ = cond_fields_.size() * embed_dim_;
      break;
    }
  }

  if (cfg_.kind == GateConditionKind::learned_vector) {
    cond_ = Param(name + ".condition", 1, cond_dim_);
    Rng rng(mix_seed(seed, cond_.name));
    const double bound = 1.0 / std::sqrt(static_cast<double>(cond_dim_));
    for (std::size_t i = 0; i < cond_.size(); ++i)
      cond_.value[i] = rng.uniform(-bound, bound);
  }

  std::vector<std::size_t> hidden = cfg_.hidden;
  if (hidden.empty()) hidden.push_back(out_dim_);
  std::vector<LayerSpec> specs;
  for (std::size_t w : hidden) specs.push_back({w, Activation::relu, 0.0, false});
  // Zero-initialized output layer: the gate opens at exactly 1 everywhere,
  // so training starts from the ungated model.
  specs.push_back({out_dim_, Activation::identity, 0.0, true});
  net_ = Mlp(name + ".net", cond_dim_, specs, seed);
}

Matrix FeatureGate::forward(const Matrix& e, GateCache& cache) const {
  if (e.cols() != out_dim_)
    throw ShapeError("gate forward: input has " + std::to_string(e.cols()) +
                     " columns, expected " + std::to_string(out_dim_));
  const std::size_t batch = e.rows();
  cache.e = e;
  cache.broadcast = (cfg_.kind == GateConditionKind::learned_vector);

  Matrix x;
  if (cache.broadcast) {
    x = cond_.value;
  } else {
    x = Matrix(batch, cond_dim_);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* src = e.row(b);
      double* dst = x.row(b);
      for (std::size_t c = 0; c < cond_fields_.size(); ++c) {
        const std::size_t f = cond_fields_[c];
        for (std::size_t t = 0; t < embed_dim_; ++t)
          dst[c * embed_dim_ + t] = src[f * embed_dim_ + t];
      }
    }
  }

  // The gate net carries no dropout, so eval mode keeps it a pure function.
  const Matrix g = net_.forward(x, Mode::eval, 0, &cache.net);
  Matrix& w = cache.weights;
  w = Matrix(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = 2.0 * sigmoid(g[i]);

  Matrix h(batch, out_dim_);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* wr = w.row(cache.broadcast ? 0 : b);
    const double* er = e.row(b);
    double* hr = h.row(b);
    for (std::size_t j = 0; j < out_dim_; ++j) hr[j] = wr[j] * er[j];
  }
  return h;
}

Matrix FeatureGate::backward(GateCache& cache, const Matrix& upstream) {
  if (!upstream.same_shape(cache.e))
    throw ShapeError("gate backward: upstream shape mismatch");
  const std::size_t batch = upstream.rows();
  const Matrix& w = cache.weights;

  Matrix de(batch, out_dim_);
  Matrix dg(batch, out_dim_);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* wr = w.row(cache.broadcast ? 0 : b);
    const double* er = cache.e.row(b);
    const double* ur = upstream.row(b);
    double* der = de.row(b);
    double* dgr = dg.row(b);
    for (std::size_t j = 0; j < out_dim_; ++j) {
      der[j] = ur[j] * wr[j];
      // d(2*sigmoid)/dg = 2*s*(1-s) = w*(1 - w/2) with w = 2s.
      dgr[j] = ur[j] * er[j] * wr[j] * (1.0 - 0.5 * wr[j]);
    }
  }

  if (cache.broadcast) {
    Matrix dg_sum(1, out_dim_);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* dgr = dg.row(b);
      for (std::size_t j = 0; j < out_dim_; ++j) dg_sum[j] += dgr[j];
    }
    const Matrix dx = net_.backward(cache.net, dg_sum);
    for (std::size_t i = 0; i < cond_.size(); ++i) cond_.grad[i] += dx[i];
  } else {
    const Matrix dx = net_.backward(cache.net, dg);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* dxr = dx.row(b);
      double* der = de.row(b);
      for (std::size_t c = 0; c < cond_fields_.size(); ++c) {
        const std::size_t f = cond_fields_[c];
        for (std::size_t t = 0; t < embed_dim_; ++t)
          der[f * embed_dim_ + t] += dxr[c * embed_dim_ + t];
      }
    }
  }
  return de;
}

std::vector<Param*> FeatureGate::params() {
  std::vector<Param*> out;
  if (learned_condition()) out.push_back(&cond_);
  for (Param* p : net_.params()) out.push_back(p);
  return out;
}

std::size_t FeatureGate::n_params() const {
  std::size_t n = learned_condition() ? cond_.size() : 0;
  return n + net_.n_params();
}

}  // namespace finalmlp
