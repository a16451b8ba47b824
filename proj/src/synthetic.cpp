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

#include "finalmlp/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "finalmlp/common.hpp"
#include "finalmlp/rng.hpp"

namespace finalmlp {

namespace {

std::string token_name(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "v%04zu", v);
  return buf;
}

// Spread of the log-normal per-token leverage.
constexpr double kLeverageSigma = 0.8;
// Token draw skew: token id = floor(V * u^kFreqSkew), so low ids are frequent
// and the tail is rare, roughly like real categorical traffic.
constexpr double kFreqSkew = 2.0;

void validate(const SyntheticSpec& spec) {
  if (spec.n == 0) throw ConfigError("synthetic: n must be positive");
  if (spec.n_fields < 2) throw ConfigError("synthetic: need at least 2 fields");
  if (spec.vocab_per_field == 0) throw ConfigError("synthetic: empty vocabulary");
  if (spec.latent_dim == 0) throw ConfigError("synthetic: latent_dim must be positive");
}

}  // namespace

FieldGroup synthetic_field_group(std::size_t field_index) {
  switch (field_index % 3) {
    case 0: return FieldGroup::user;
    case 1: return FieldGroup::item;
    default: return FieldGroup::context;
  }
}

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const std::size_t m = spec.n_fields;
  const std::size_t vpf = spec.vocab_per_field;
  const std::size_t r = spec.latent_dim;

  SyntheticData out;
  out.schema.min_count = 1;
  for (std::size_t f = 0; f < m; ++f) {
    FieldSchema fs;
    fs.name = "f" + std::to_string(f);
    fs.group = synthetic_field_group(f);
    for (std::size_t v = 0; v < vpf; ++v)
      fs.vocab.emplace(token_name(v), static_cast<std::uint32_t>(v));
    fs.oov_id = static_cast<std::uint32_t>(vpf);
    out.schema.fields.push_back(std::move(fs));
  }

  // One latent factor vector per (field, token), drawn once. Each token also
  // gets a log-normal leverage multiplier, so a few tokens carry large factors
  // while most stay small; which fields dominate an instance then depends on
  // the tokens it drew.
  Rng latent_rng(mix_seed(spec.seed, "latent"));
  std::vector<double> z(m * vpf * r);
  for (std::size_t f = 0; f < m; ++f)
    for (std::size_t v = 0; v < vpf; ++v) {
      const double lev = std::exp(kLeverageSigma * latent_rng.normal());
      double* zt = z.data() + (f * vpf + v) * r;
      for (std::size_t j = 0; j < r; ++j) zt[j] = spec.latent_scale * lev * latent_rng.normal();
    }
  const auto latent = [&](std::size_t f, std::size_t tok) {
    return z.data() + (f * vpf + tok) * r;
  };

  // One mixing matrix per cross-group field pair. Without the mixing the
  // pairwise products collapse into squared norms of the summed latent
  // vector, a nearly additive target; random mixing keeps cross-coordinate
  // products essential. Same-group pairs stay at zero: affinity comes from
  // matching across sides, as in click data.
  Rng pair_rng(mix_seed(spec.seed, "pairs"));
  const double mix_sd = 1.0 / std::sqrt(static_cast<double>(r));
  std::vector<double> mix(m * m * r * r, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      if (synthetic_field_group(a) == synthetic_field_group(b)) continue;
      for (std::size_t t = 0; t < r * r; ++t)
        mix[(a * m + b) * r * r + t] = mix_sd * pair_rng.normal();
    }

  Rng draw_rng(mix_seed(spec.seed, "draw"));
  out.data.n_fields = m;
  out.data.ids.reserve(spec.n * m);
  out.data.labels.reserve(spec.n);
  out.true_logits.reserve(spec.n);
  std::vector<std::uint32_t> row(m);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t f = 0; f < m; ++f) {
      const double u = draw_rng.uniform();
      auto v = static_cast<std::size_t>(static_cast<double>(vpf) * std::pow(u, kFreqSkew));
      row[f] = static_cast<std::uint32_t>(v < vpf ? v : vpf - 1);
    }
    double logit = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      const double* za = latent(a, row[a]);
      for (std::size_t b = a + 1; b < m; ++b) {
        if (synthetic_field_group(a) == synthetic_field_group(b)) continue;
        const double* zb = latent(b, row[b]);
        const double* pair = mix.data() + (a * m + b) * r * r;
        for (std::size_t p = 0; p < r; ++p)
          for (std::size_t q = 0; q < r; ++q) logit += za[p] * pair[p * r + q] * zb[q];
      }
    }
    const std::uint8_t label = draw_rng.uniform() < sigmoid(logit) ? 1 : 0;
    out.data.append(row.data(), label);
    out.true_logits.push_back(logit);
  }
  return out;
}

void write_synthetic_csv(const std::string& path, const SyntheticSpec& spec) {
  const SyntheticData s = make_synthetic(spec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  for (std::size_t c = 0; c < spec.n_fields; ++c) f << "f" << c << ",";
  f << "label\n";
  for (std::size_t i = 0; i < s.data.n(); ++i) {
    const std::uint32_t* row = s.data.row(i);
    for (std::size_t c = 0; c < spec.n_fields; ++c) f << token_name(row[c]) << ",";
    f << static_cast<int>(s.data.labels[i]) << "\n";
  }
  if (!f.good()) throw IoError("write failed for '" + path + "'");
}

}  // namespace finalmlp
