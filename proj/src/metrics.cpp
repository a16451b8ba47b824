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

#include "finalmlp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "finalmlp/common.hpp"

namespace finalmlp {

AucFraction auc_fraction(const std::vector<double>& scores, const std::vector<double>& labels) {
  if (scores.size() != labels.size())
    throw ShapeError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::uint64_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0)
      throw DataError("auc: label at index " + std::to_string(i) + " is not 0/1");
    if (!std::isfinite(scores[i]))
      throw DataError("auc: non-finite score at index " + std::to_string(i));
    if (labels[i] == 1.0) ++n_pos;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw DataError("auc undefined: only one class present");

  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return a < b;  // total order keeps the sort deterministic
  });

  // Walk tie groups; each positive contributes twice its average 1-based
  // rank, i.e. (lo + hi), keeping everything integral.
  std::uint64_t sum2 = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const std::uint64_t rank2 = static_cast<std::uint64_t>(i + 1) + static_cast<std::uint64_t>(j);
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]] == 1.0) sum2 += rank2;
    i = j;
  }

  AucFraction f;
  f.num2 = sum2 - n_pos * (n_pos + 1);
  f.den = n_pos * n_neg;
  return f;
}

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
  return auc_fraction(scores, labels).value();
}

double logloss(const std::vector<double>& scores, const std::vector<double>& labels) {
  if (scores.size() != labels.size())
    throw ShapeError("logloss: scores and labels differ in length");
  if (scores.empty()) throw ShapeError("logloss: empty input");
  constexpr double kEps = 1e-7;
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::min(std::max(scores[i], kEps), 1.0 - kEps);
    const double y = labels[i];
    if (y != 0.0 && y != 1.0)
      throw DataError("logloss: label at index " + std::to_string(i) + " is not 0/1");
    acc -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return acc / static_cast<double>(scores.size());
}

}  // namespace finalmlp
