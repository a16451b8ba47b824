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

#include "finalmlp/mlp.hpp"

#include <cmath>

#include "finalmlp/common.hpp"
#include "finalmlp/kernels.hpp"
#include "finalmlp/rng.hpp"

namespace finalmlp {

Mlp::Mlp(const std::string& name_prefix, std::size_t in_dim, const std::vector<LayerSpec>& specs,
         std::uint64_t seed)
    : in_dim_(in_dim) {
  if (in_dim == 0) throw ConfigError(name_prefix + ": input dim must be >= 1");
  std::size_t fan_in = in_dim;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const LayerSpec& spec = specs[l];
    if (spec.width == 0) throw ConfigError(name_prefix + ": layer width must be >= 1");
    if (spec.dropout < 0.0 || spec.dropout >= 1.0)
      throw ConfigError(name_prefix + ": dropout_rate must lie in [0,1)");
    DenseLayer layer;
    const std::string id = name_prefix + ".layer" + std::to_string(l);
    layer.w = Param(id + ".w", spec.width, fan_in);
    layer.b = Param(id + ".b", 1, spec.width);
    layer.act = spec.act;
    layer.dropout = spec.dropout;
    if (!spec.zero_init) {
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      Rng rng(mix_seed(seed, layer.w.name));
      for (std::size_t i = 0; i < layer.w.value.size(); ++i)
        layer.w.value[i] = rng.uniform(-bound, bound);
    }
    layers_.push_back(std::move(layer));
    fan_in = spec.width;
  }
}

Matrix Mlp::forward(const Matrix& x, Mode mode, std::uint64_t dropout_seed,
                    MlpCache* cache) const {
  if (x.cols() != in_dim_)
    throw ShapeError("mlp forward: input dim " + std::to_string(x.cols()) + " != expected " +
                     std::to_string(in_dim_));
  if (cache) {
    *cache = MlpCache{};
    cache->origin = this;
    cache->mode = mode;
    cache->inputs.reserve(layers_.size());
    cache->preacts.reserve(layers_.size());
    cache->masks.resize(layers_.size());
  }

  Matrix cur = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (cache) cache->inputs.push_back(cur);

    Matrix pre(cur.rows(), layer.w.value.rows());
    kernels::linear_forward(cur, layer.w.value, layer.b.value, pre);
    if (cache) cache->preacts.push_back(pre);

    Matrix out(pre.rows(), pre.cols());
    if (layer.act == Activation::relu) {
      kernels::relu(pre, out);
    } else {
      out = std::move(pre);
    }

    if (mode == Mode::train && layer.dropout > 0.0) {
      // Inverted dropout: kept units scale by 1/keep so eval needs no rescale.
      const double keep = 1.0 - layer.dropout;
      Matrix mask(out.rows(), out.cols());
      Rng rng(mix_seed(dropout_seed, splitmix64(l)));
      for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
      Matrix dropped(out.rows(), out.cols());
      kernels::hadamard(out, mask, dropped);
      if (cache) cache->masks[l] = std::move(mask);
      cur = std::move(dropped);
    } else {
      cur = std::move(out);
    }
  }
  return cur;
}

Matrix Mlp::backward(MlpCache& cache, const Matrix& upstream) {
  if (cache.origin != this || cache.inputs.size() != layers_.size())
    throw Error("mlp backward: cache does not belong to this network");
  if (cache.spent) throw Error("mlp backward: stale cache (already consumed)");
  cache.spent = true;
  if (upstream.rows() != (layers_.empty() ? upstream.rows() : cache.preacts.back().rows()) ||
      upstream.cols() != out_dim())
    throw ShapeError("mlp backward: upstream shape mismatch");

  Matrix dy = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    DenseLayer& layer = layers_[l];
    if (cache.mode == Mode::train && layer.dropout > 0.0) {
      Matrix masked(dy.rows(), dy.cols());
      kernels::hadamard(dy, cache.masks[l], masked);
      dy = std::move(masked);
    }
    if (layer.act == Activation::relu) {
      Matrix dpre(dy.rows(), dy.cols());
      kernels::relu_backward(dy, cache.preacts[l], dpre);
      dy = std::move(dpre);
    }
    kernels::linear_backward_params(dy, cache.inputs[l], layer.w.grad, layer.b.grad);
    Matrix dx(dy.rows(), layer.w.value.cols());
    kernels::linear_backward_input(dy, layer.w.value, dx);
    dy = std::move(dx);
  }
  return dy;
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_) {
    out.push_back(&layer.w);
    out.push_back(&layer.b);
  }
  return out;
}

std::size_t Mlp::n_params() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer.w.size() + layer.b.size();
  return total;
}

}  // namespace finalmlp
