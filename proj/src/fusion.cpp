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

#include "finalmlp/fusion.hpp"

#include <cmath>

#include "finalmlp/common.hpp"
#include "finalmlp/rng.hpp"

namespace finalmlp {

const char* to_string(FusionKind k) {
  switch (k) {
    case FusionKind::sum: return "sum";
    case FusionKind::concat: return "concat";
    case FusionKind::ewp: return "ewp";
    case FusionKind::bilinear: return "bilinear";
    case FusionKind::single: return "single";
  }
  return "?";
}

FusionKind fusion_kind_from_string(const std::string& s) {
  if (s == "sum") return FusionKind::sum;
  if (s == "concat") return FusionKind::concat;
  if (s == "ewp") return FusionKind::ewp;
  if (s == "bilinear") return FusionKind::bilinear;
  throw ConfigError("unknown fusion kind '" + s + "' (expected sum|concat|ewp|bilinear)");
}

namespace {

void init_small_uniform(Param& p, std::uint64_t seed) {
  Rng rng(mix_seed(seed, p.name));
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.cols()));
  for (std::size_t i = 0; i < p.size(); ++i) p.value[i] = rng.uniform(-bound, bound);
}

void check_cache(const void* self, FusionCache& cache) {
  if (cache.origin != self) throw ShapeError("fusion backward: cache from a different module");
  if (cache.spent) throw ShapeError("fusion backward: stale cache (already consumed)");
  cache.spent = true;
}

}  // namespace

BilinearFusion::BilinearFusion(const std::string& name, std::size_t d1, std::size_t d2,
                               std::size_t heads, std::uint64_t seed)
    : d1_(d1), d2_(d2), k_(heads) {
  if (d1_ == 0 || d2_ == 0) throw ConfigError("bilinear fusion: zero stream width");
  if (k_ == 0) throw ConfigError("bilinear fusion: heads must be >= 1");
  if (d1_ % k_ != 0 || d2_ % k_ != 0)
    throw ConfigError("bilinear fusion: heads=" + std::to_string(k_) +
                      " does not divide stream widths " + std::to_string(d1_) + "/" +
                      std::to_string(d2_) + " (no padding)");
  s1_ = d1_ / k_;
  s2_ = d2_ / k_;
  b_ = Param(name + ".b", 1, k_);
  w1_ = Param(name + ".w1", 1, d1_);
  w2_ = Param(name + ".w2", 1, d2_);
  w3_ = Param(name + ".w3", d1_, s2_);
  // W3 and b start at zero: the model opens as plain concat-linear fusion
  // and the interaction matrices grow from a neutral start.
  init_small_uniform(w1_, seed);
  init_small_uniform(w2_, seed);
}

std::vector<double> BilinearFusion::forward(const Matrix& o1, const Matrix& o2,
                                            FusionCache& cache) const {
  if (o1.cols() != d1_ || o2.cols() != d2_ || o1.rows() != o2.rows())
    throw ShapeError("bilinear fusion forward: stream shape mismatch");
  cache.origin = this;
  cache.spent = false;
  cache.o1 = o1;
  cache.o2 = o2;

  const std::size_t batch = o1.rows();
  std::vector<double> logit(batch, 0.0);
#pragma omp parallel for schedule(static) if (batch * d1_ * s2_ > 8192)
  for (std::size_t b = 0; b < batch; ++b) {
    const double* r1 = o1.row(b);
    const double* r2 = o2.row(b);
    double acc = 0.0;
    for (std::size_t j = 0; j < k_; ++j) {
      const double* x = r1 + j * s1_;
      const double* y = r2 + j * s2_;
      double head = b_.value[j];
      for (std::size_t i = 0; i < s1_; ++i) head += w1_.value[j * s1_ + i] * x[i];
      for (std::size_t t = 0; t < s2_; ++t) head += w2_.value[j * s2_ + t] * y[t];
      for (std::size_t i = 0; i < s1_; ++i) {
        const double* wrow = w3_.value.row(j * s1_ + i);
        double dot = 0.0;
        for (std::size_t t = 0; t < s2_; ++t) dot += wrow[t] * y[t];
        head += x[i] * dot;
      }
      acc += head;
    }
    logit[b] = acc;
  }
  return logit;
}

FusionGrads BilinearFusion::backward(FusionCache& cache, const std::vector<double>& upstream) {
  check_cache(this, cache);
  const Matrix& o1 = cache.o1;
  const Matrix& o2 = cache.o2;
  const std::size_t batch = o1.rows();
  if (upstream.size() != batch) throw ShapeError("bilinear fusion backward: upstream size");

  FusionGrads g{Matrix(batch, d1_), Matrix(batch, d2_)};
#pragma omp parallel for schedule(static) if (batch * d1_ * s2_ > 8192)
  for (std::size_t b = 0; b < batch; ++b) {
    const double u = upstream[b];
    const double* r1 = o1.row(b);
    const double* r2 = o2.row(b);
    double* g1 = g.do1.row(b);
    double* g2 = g.do2.row(b);
    for (std::size_t j = 0; j < k_; ++j) {
      const double* x = r1 + j * s1_;
      const double* y = r2 + j * s2_;
      for (std::size_t i = 0; i < s1_; ++i) {
        const double* wrow = w3_.value.row(j * s1_ + i);
        double dot = 0.0;
        for (std::size_t t = 0; t < s2_; ++t) dot += wrow[t] * y[t];
        g1[j * s1_ + i] = u * (w1_.value[j * s1_ + i] + dot);
      }
      for (std::size_t t = 0; t < s2_; ++t) {
        double dot = 0.0;
        for (std::size_t i = 0; i < s1_; ++i) dot += w3_.value(j * s1_ + i, t) * x[i];
        g2[j * s2_ + t] = u * (w2_.value[j * s2_ + t] + dot);
      }
    }
  }

  // Parameter gradients: heads own disjoint slices, batch order fixed inside.
#pragma omp parallel for schedule(static) if (k_ > 1 && batch * s1_ * s2_ > 8192)
  for (std::size_t j = 0; j < k_; ++j) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double u = upstream[b];
      const double* x = o1.row(b) + j * s1_;
      const double* y = o2.row(b) + j * s2_;
      b_.grad[j] += u;
      for (std::size_t i = 0; i < s1_; ++i) w1_.grad[j * s1_ + i] += u * x[i];
      for (std::size_t t = 0; t < s2_; ++t) w2_.grad[j * s2_ + t] += u * y[t];
      for (std::size_t i = 0; i < s1_; ++i) {
        double* grow = w3_.grad.row(j * s1_ + i);
        const double ux = u * x[i];
        for (std::size_t t = 0; t < s2_; ++t) grow[t] += ux * y[t];
      }
    }
  }
  return g;
}

std::vector<Param*> BilinearFusion::params() { return {&b_, &w1_, &w2_, &w3_}; }

std::size_t BilinearFusion::n_params() const {
  return b_.size() + w1_.size() + w2_.size() + w3_.size();
}

LinearFusion::LinearFusion(const std::string& name, FusionKind kind, std::size_t d1,
                           std::size_t d2, std::uint64_t seed)
    : kind_(kind), d1_(d1), d2_(d2) {
  switch (kind_) {
    case FusionKind::sum:
    case FusionKind::ewp:
      if (d1_ != d2_)
        throw ConfigError(std::string(to_string(kind_)) + " fusion requires equal stream widths, got " +
                          std::to_string(d1_) + " and " + std::to_string(d2_));
      fused_dim_ = d1_;
      break;
    case FusionKind::concat:
      fused_dim_ = d1_ + d2_;
      break;
    case FusionKind::single:
      fused_dim_ = d1_;
      break;
    case FusionKind::bilinear:
      throw ConfigError("LinearFusion cannot implement bilinear");
  }
  if (fused_dim_ == 0) throw ConfigError("linear fusion: zero stream width");
  b_ = Param(name + ".b", 1, 1);
  w_ = Param(name + ".w", 1, fused_dim_);
  init_small_uniform(w_, seed);
}

Matrix LinearFusion::fuse_rows(const Matrix& o1, const Matrix& o2) const {
  const std::size_t batch = o1.rows();
  Matrix f(batch, fused_dim_);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* r1 = o1.row(b);
    double* fr = f.row(b);
    switch (kind_) {
      case FusionKind::sum: {
        const double* r2 = o2.row(b);
        for (std::size_t i = 0; i < d1_; ++i) fr[i] = r1[i] + r2[i];
        break;
      }
      case FusionKind::ewp: {
        const double* r2 = o2.row(b);
        for (std::size_t i = 0; i < d1_; ++i) fr[i] = r1[i] * r2[i];
        break;
      }
      case FusionKind::concat: {
        const double* r2 = o2.row(b);
        for (std::size_t i = 0; i < d1_; ++i) fr[i] = r1[i];
        for (std::size_t i = 0; i < d2_; ++i) fr[d1_ + i] = r2[i];
        break;
      }
      case FusionKind::single:
        for (std::size_t i = 0; i < d1_; ++i) fr[i] = r1[i];
        break;
      case FusionKind::bilinear:
        break;
    }
  }
  return f;
}

std::vector<double> LinearFusion::forward(const Matrix& o1, const Matrix& o2,
                                          FusionCache& cache) const {
  if (o1.cols() != d1_) throw ShapeError("linear fusion forward: o1 width mismatch");
  if (kind_ != FusionKind::single && (o2.cols() != d2_ || o2.rows() != o1.rows()))
    throw ShapeError("linear fusion forward: o2 shape mismatch");
  cache.origin = this;
  cache.spent = false;
  cache.o1 = o1;
  cache.o2 = o2;

  const Matrix f = fuse_rows(o1, o2);
  const std::size_t batch = f.rows();
  std::vector<double> logit(batch, 0.0);
#pragma omp parallel for schedule(static) if (batch * fused_dim_ > 16384)
  for (std::size_t b = 0; b < batch; ++b) {
    const double* fr = f.row(b);
    double acc = b_.value[0];
    for (std::size_t i = 0; i < fused_dim_; ++i) acc += w_.value[i] * fr[i];
    logit[b] = acc;
  }
  return logit;
}

FusionGrads LinearFusion::backward(FusionCache& cache, const std::vector<double>& upstream) {
  check_cache(this, cache);
  const Matrix& o1 = cache.o1;
  const Matrix& o2 = cache.o2;
  const std::size_t batch = o1.rows();
  if (upstream.size() != batch) throw ShapeError("linear fusion backward: upstream size");

  FusionGrads g;
  g.do1 = Matrix(batch, d1_);
  if (kind_ != FusionKind::single) g.do2 = Matrix(batch, d2_);

  for (std::size_t b = 0; b < batch; ++b) {
    const double u = upstream[b];
    const double* r1 = o1.row(b);
    double* g1 = g.do1.row(b);
    b_.grad[0] += u;
    switch (kind_) {
      case FusionKind::sum: {
        const double* r2 = o2.row(b);
        double* g2 = g.do2.row(b);
        for (std::size_t i = 0; i < d1_; ++i) {
          const double uw = u * w_.value[i];
          g1[i] = uw;
          g2[i] = uw;
          w_.grad[i] += u * (r1[i] + r2[i]);
        }
        break;
      }
      case FusionKind::ewp: {
        const double* r2 = o2.row(b);
        double* g2 = g.do2.row(b);
        for (std::size_t i = 0; i < d1_; ++i) {
          const double uw = u * w_.value[i];
          g1[i] = uw * r2[i];
          g2[i] = uw * r1[i];
          w_.grad[i] += u * r1[i] * r2[i];
        }
        break;
      }
      case FusionKind::concat: {
        const double* r2 = o2.row(b);
        double* g2 = g.do2.row(b);
        for (std::size_t i = 0; i < d1_; ++i) {
          g1[i] = u * w_.value[i];
          w_.grad[i] += u * r1[i];
        }
        for (std::size_t i = 0; i < d2_; ++i) {
          g2[i] = u * w_.value[d1_ + i];
          w_.grad[d1_ + i] += u * r2[i];
        }
        break;
      }
      case FusionKind::single:
        for (std::size_t i = 0; i < d1_; ++i) {
          g1[i] = u * w_.value[i];
          w_.grad[i] += u * r1[i];
        }
        break;
      case FusionKind::bilinear:
        break;
    }
  }
  return g;
}

std::vector<Param*> LinearFusion::params() { return {&b_, &w_}; }

std::size_t LinearFusion::n_params() const { return b_.size() + w_.size(); }

std::unique_ptr<Fusion> make_fusion(const std::string& name, const FusionSpec& spec,
                                    std::size_t d1, std::size_t d2, std::uint64_t seed) {
  if (spec.kind == FusionKind::bilinear)
    return std::make_unique<BilinearFusion>(name, d1, d2, spec.heads, seed);
  return std::make_unique<LinearFusion>(name, spec.kind, d1, d2, seed);
}

std::size_t fusion_param_count(const FusionSpec& spec, std::size_t d1, std::size_t d2) {
  switch (spec.kind) {
    case FusionKind::bilinear: {
      if (spec.heads == 0 || d1 % spec.heads != 0 || d2 % spec.heads != 0)
        throw ConfigError("fusion_param_count: invalid head count");
      return spec.heads + d1 + d2 + bilinear_matrix_term(d1, d2, spec.heads);
    }
    case FusionKind::sum:
    case FusionKind::ewp:
      if (d1 != d2) throw ConfigError("fusion_param_count: sum/ewp need d1 == d2");
      return 1 + d1;
    case FusionKind::concat:
      return 1 + d1 + d2;
    case FusionKind::single:
      return 1 + d1;
  }
  throw ConfigError("fusion_param_count: unknown kind");
}

std::size_t bilinear_matrix_term(std::size_t d1, std::size_t d2, std::size_t k) {
  if (k == 0 || d1 % k != 0 || d2 % k != 0)
    throw ConfigError("bilinear_matrix_term: k must divide both stream widths");
  return d1 * (d2 / k);
}

}  // namespace finalmlp
