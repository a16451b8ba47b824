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
#include <string>
#include <vector>

#include "finalmlp/matrix.hpp"

namespace finalmlp {

enum class Mode { train, eval };
enum class Activation { relu, identity };

/// One dense layer to construct: width, activation, dropout on its output
/// (train mode only, inverted scaling), and optional zero initialization.
struct LayerSpec {
  std::size_t width = 0;
  Activation act = Activation::relu;
  double dropout = 0.0;
  bool zero_init = false;
};

struct DenseLayer {
  Param w;  // out x in
  Param b;  // 1 x out
  Activation act = Activation::identity;
  double dropout = 0.0;
};

class Mlp;

/// Forward intermediates needed by the backward pass. Single use: a second
/// backward on the same cache is a stale-cache error.
struct MlpCache {
  const Mlp* origin = nullptr;
  Mode mode = Mode::eval;
  bool spent = false;
  std::vector<Matrix> inputs;   // input to each layer
  std::vector<Matrix> preacts;  // pre-activation of each layer
  std::vector<Matrix> masks;    // dropout multipliers; empty when inactive
};

/// Plain feed-forward network with hand-derived backward. Weights use
/// fan-in-scaled uniform init (biases zero), seeded per tensor name.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name_prefix, std::size_t in_dim, const std::vector<LayerSpec>& specs,
      std::uint64_t seed);

  /// mode=train applies dropout with a mask that is a pure function of
  /// (dropout_seed, layer index); mode=eval is deterministic with no dropout.
  Matrix forward(const Matrix& x, Mode mode, std::uint64_t dropout_seed, MlpCache* cache) const;

  /// Accumulates parameter gradients for the cached forward and returns the
  /// gradient with respect to the input.
  Matrix backward(MlpCache& cache, const Matrix& upstream);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return layers_.empty() ? in_dim_ : layers_.back().w.value.rows(); }
  std::size_t n_layers() const { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<Param*> params();
  std::size_t n_params() const;

 private:
  std::size_t in_dim_ = 0;
  std::vector<DenseLayer> layers_;
};

}  // namespace finalmlp
