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

#include "finalmlp/model.hpp"

#include "finalmlp/common.hpp"

namespace finalmlp {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::FinalMLP: return "FinalMLP";
    case Variant::DualMLP: return "DualMLP";
    case Variant::MLP: return "MLP";
    case Variant::FinalMLP_noFS: return "FinalMLP-noFS";
    case Variant::FinalMLP_sum: return "FinalMLP-sum";
    case Variant::FinalMLP_concat: return "FinalMLP-concat";
    case Variant::FinalMLP_ewp: return "FinalMLP-ewp";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "FinalMLP") return Variant::FinalMLP;
  if (s == "DualMLP") return Variant::DualMLP;
  if (s == "MLP") return Variant::MLP;
  if (s == "FinalMLP-noFS") return Variant::FinalMLP_noFS;
  if (s == "FinalMLP-sum") return Variant::FinalMLP_sum;
  if (s == "FinalMLP-concat") return Variant::FinalMLP_concat;
  if (s == "FinalMLP-ewp") return Variant::FinalMLP_ewp;
  throw ConfigError("unknown variant '" + s +
                    "' (expected FinalMLP|DualMLP|MLP|FinalMLP-noFS|FinalMLP-sum|"
                    "FinalMLP-concat|FinalMLP-ewp)");
}

FusionSpec effective_fusion(const ModelConfig& cfg) {
  switch (cfg.variant) {
    case Variant::FinalMLP:
    case Variant::FinalMLP_noFS:
      return cfg.fusion;
    case Variant::FinalMLP_sum: return {FusionKind::sum, 1};
    case Variant::FinalMLP_concat: return {FusionKind::concat, 1};
    case Variant::FinalMLP_ewp: return {FusionKind::ewp, 1};
    case Variant::DualMLP: return {FusionKind::concat, 1};
    case Variant::MLP: return {FusionKind::single, 1};
  }
  throw ConfigError("effective_fusion: unknown variant");
}

namespace {

std::vector<LayerSpec> stream_layers(const StreamSpec& s) {
  if (s.widths.empty()) throw ConfigError("stream spec: at least one layer required");
  std::vector<LayerSpec> specs;
  for (std::size_t w : s.widths) specs.push_back({w, Activation::relu, s.dropout, false});
  return specs;
}

bool variant_uses_gates(Variant v) {
  switch (v) {
    case Variant::FinalMLP:
    case Variant::FinalMLP_sum:
    case Variant::FinalMLP_concat:
    case Variant::FinalMLP_ewp:
      return true;
    default:
      return false;
  }
}

}  // namespace

Model::Model(const ModelConfig& cfg, const FeatureSchema& schema)
    : cfg_(cfg), embed_(schema, cfg.embed_dim, cfg.seed) {
  const bool two = cfg_.variant != Variant::MLP;
  const bool gates = variant_uses_gates(cfg_.variant);

  if (gates) {
    gate1_ = std::make_unique<FeatureGate>("gate1", cfg_.gate1, schema, cfg_.embed_dim, cfg_.seed);
    gate2_ = std::make_unique<FeatureGate>("gate2", cfg_.gate2, schema, cfg_.embed_dim, cfg_.seed);
  }

  const std::size_t in_dim = embed_.output_dim();
  stream1_ = Mlp("stream1", in_dim, stream_layers(cfg_.stream1), cfg_.seed);
  std::size_t d2 = 0;
  if (two) {
    stream2_ = std::make_unique<Mlp>("stream2", in_dim, stream_layers(cfg_.stream2), cfg_.seed);
    d2 = stream2_->out_dim();
  }
  fusion_ = make_fusion("fusion", effective_fusion(cfg_), stream1_.out_dim(), d2, cfg_.seed);
}

std::vector<double> Model::forward(const IdMatrix& ids, Mode mode, std::uint64_t dropout_seed,
                                   ModelCache& cache) const {
  cache.mode = mode;
  cache.ids = ids;
  cache.e = embed_.forward(ids);

  const Matrix& e = cache.e;
  Matrix h1 = gate1_ ? gate1_->forward(e, cache.gate1) : e;
  const Matrix o1 =
      stream1_.forward(h1, mode, mix_seed(dropout_seed, "stream1"), &cache.s1);

  if (!stream2_) {
    Matrix empty;
    return fusion_->forward(o1, empty, cache.fuse);
  }
  Matrix h2 = gate2_ ? gate2_->forward(e, cache.gate2) : e;
  const Matrix o2 =
      stream2_->forward(h2, mode, mix_seed(dropout_seed, "stream2"), &cache.s2);
  return fusion_->forward(o1, o2, cache.fuse);
}

EmbeddingGrad Model::backward(ModelCache& cache, const std::vector<double>& dlogits) {
  FusionGrads fg = fusion_->backward(cache.fuse, dlogits);
  Matrix dh1 = stream1_.backward(cache.s1, fg.do1);
  Matrix de = gate1_ ? gate1_->backward(cache.gate1, dh1) : std::move(dh1);

  if (stream2_) {
    Matrix dh2 = stream2_->backward(cache.s2, fg.do2);
    Matrix de2 = gate2_ ? gate2_->backward(cache.gate2, dh2) : std::move(dh2);
    for (std::size_t i = 0; i < de.size(); ++i) de[i] += de2[i];
  }

  EmbeddingGrad eg = embed_.backward(cache.ids, de);
  embed_.accumulate(eg);
  return eg;
}

std::vector<double> Model::predict(const IdMatrix& ids) const {
  ModelCache cache;
  std::vector<double> logits = forward(ids, Mode::eval, 0, cache);
  for (double& z : logits) z = sigmoid(z);
  return logits;
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out;
  out.push_back(&embed_.table);
  if (gate1_)
    for (Param* p : gate1_->params()) out.push_back(p);
  if (gate2_)
    for (Param* p : gate2_->params()) out.push_back(p);
  for (Param* p : stream1_.params()) out.push_back(p);
  if (stream2_)
    for (Param* p : stream2_->params()) out.push_back(p);
  for (Param* p : fusion_->params()) out.push_back(p);
  return out;
}

std::size_t Model::n_params() const {
  std::size_t n = embed_.table.size();
  if (gate1_) n += gate1_->n_params();
  if (gate2_) n += gate2_->n_params();
  n += stream1_.n_params();
  if (stream2_) n += stream2_->n_params();
  n += fusion_->n_params();
  return n;
}

std::vector<std::pair<std::string, std::size_t>> Model::param_counts() const {
  std::vector<std::pair<std::string, std::size_t>> out;
  out.emplace_back("embedding", embed_.table.size());
  if (gate1_) out.emplace_back("gate1", gate1_->n_params());
  if (gate2_) out.emplace_back("gate2", gate2_->n_params());
  out.emplace_back("stream1", stream1_.n_params());
  if (stream2_) out.emplace_back("stream2", stream2_->n_params());
  out.emplace_back("fusion", fusion_->n_params());
  return out;
}

}  // namespace finalmlp
