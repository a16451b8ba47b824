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
#include <memory>
#include <string>
#include <vector>

#include "finalmlp/matrix.hpp"

namespace finalmlp {

/// `single` is the plain linear head used by the one-stream baseline; it is
/// not a configurable fusion of two streams.
enum class FusionKind { sum, concat, ewp, bilinear, single };

const char* to_string(FusionKind k);
FusionKind fusion_kind_from_string(const std::string& s);

struct FusionSpec {
  FusionKind kind = FusionKind::bilinear;
  std::size_t heads = 1;  // read for bilinear only
};

struct FusionCache {
  const void* origin = nullptr;
  bool spent = false;
  Matrix o1;
  Matrix o2;
};

struct FusionGrads {
  Matrix do1;
  Matrix do2;
};

/// Combines the two stream outputs into one pre-sigmoid logit per instance.
class Fusion {
 public:
  virtual ~Fusion() = default;
  virtual std::vector<double> forward(const Matrix& o1, const Matrix& o2,
                                      FusionCache& cache) const = 0;
  /// Accumulates parameter gradients and returns stream gradients.
  virtual FusionGrads backward(FusionCache& cache, const std::vector<double>& upstream) = 0;
  virtual std::vector<Param*> params() = 0;
  virtual std::size_t n_params() const = 0;
};

/// Multi-head bilinear pooling. Streams split into k equal-width subspaces;
/// per head j the logit contribution is
///   b_j + w1_j'o1_j + w2_j'o2_j + o1_j' W3_j o2_j
/// and heads are sum-pooled in ascending order. k must divide both stream
/// widths; there is no padding. The per-head matrices are stored stacked:
/// W3 has d1 rows and d2/k columns, head j owning rows [j*d1/k, (j+1)*d1/k).
class BilinearFusion : public Fusion {
 public:
  BilinearFusion(const std::string& name, std::size_t d1, std::size_t d2, std::size_t heads,
                 std::uint64_t seed);

  std::vector<double> forward(const Matrix& o1, const Matrix& o2,
                              FusionCache& cache) const override;
  FusionGrads backward(FusionCache& cache, const std::vector<double>& upstream) override;
  std::vector<Param*> params() override;
  std::size_t n_params() const override;

  std::size_t heads() const { return k_; }
  Param& w1() { return w1_; }
  Param& w2() { return w2_; }
  Param& w3() { return w3_; }
  Param& bias() { return b_; }

 private:
  std::size_t d1_ = 0, d2_ = 0, k_ = 0;
  std::size_t s1_ = 0, s2_ = 0;  // per-head widths d1/k, d2/k
  Param b_;                      // 1 x k
  Param w1_;                     // 1 x d1
  Param w2_;                     // 1 x d2
  Param w3_;                     // d1 x d2/k, stacked per head
};

/// The non-bilinear fusions: a linear map over o1+o2, [o1,o2], o1*o2, or
/// (for `single`) o1 alone.
class LinearFusion : public Fusion {
 public:
  LinearFusion(const std::string& name, FusionKind kind, std::size_t d1, std::size_t d2,
               std::uint64_t seed);

  std::vector<double> forward(const Matrix& o1, const Matrix& o2,
                              FusionCache& cache) const override;
  FusionGrads backward(FusionCache& cache, const std::vector<double>& upstream) override;
  std::vector<Param*> params() override;
  std::size_t n_params() const override;

  FusionKind kind() const { return kind_; }
  Param& w() { return w_; }
  Param& bias() { return b_; }

 private:
  Matrix fuse_rows(const Matrix& o1, const Matrix& o2) const;

  FusionKind kind_ = FusionKind::concat;
  std::size_t d1_ = 0, d2_ = 0, fused_dim_ = 0;
  Param b_;  // 1 x 1
  Param w_;  // 1 x fused_dim
};

std::unique_ptr<Fusion> make_fusion(const std::string& name, const FusionSpec& spec,
                                    std::size_t d1, std::size_t d2, std::uint64_t seed);

/// Learnable scalar count of the fusion stage.
std::size_t fusion_param_count(const FusionSpec& spec, std::size_t d1, std::size_t d2);

/// Element count of the stacked per-head interaction matrices: d1*d2/k.
std::size_t bilinear_matrix_term(std::size_t d1, std::size_t d2, std::size_t k);

}  // namespace finalmlp
