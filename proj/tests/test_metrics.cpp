#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "finalmlp/common.hpp"
#include "finalmlp/loss.hpp"
#include "finalmlp/metrics.hpp"
#include "finalmlp/rng.hpp"

using namespace finalmlp;

namespace {

// Brute-force pairwise AUC in the same doubled-count integers: each ordered
// positive/negative pair adds 2 when the positive scores higher, 1 on a tie.
AucFraction pairwise_oracle(const std::vector<double>& scores, const std::vector<double>& labels) {
  AucFraction f;
  std::uint64_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1.0) {
      ++n_neg;
      continue;
    }
    ++n_pos;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] == 1.0) continue;
      if (scores[i] > scores[j]) f.num2 += 2;
      else if (scores[i] == scores[j]) f.num2 += 1;
    }
  }
  f.den = n_pos * n_neg;
  return f;
}

// Random corpus quantized to a coarse grid so ties occur constantly.
void tied_corpus(Rng& rng, std::size_t n, std::vector<double>& scores,
                 std::vector<double>& labels) {
  scores.resize(n);
  labels.resize(n);
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = static_cast<double>(rng.below(16)) / 16.0;
    labels[i] = (rng.below(2) == 0) ? 0.0 : 1.0;
    (labels[i] == 1.0 ? has_pos : has_neg) = true;
  }
  if (!has_pos) labels[0] = 1.0;
  if (!has_neg) labels[n - 1] = 0.0;
}

}  // namespace

TEST_CASE("worked ranking example") {
  const std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
  const std::vector<double> labels{0.0, 0.0, 1.0, 1.0};
  const AucFraction f = auc_fraction(scores, labels);
  CHECK(f.num2 == 6);  // 3 correctly ordered pairs of 4, no ties
  CHECK(f.den == 4);
  CHECK(auc(scores, labels) == 0.75);
}

TEST_CASE("separation extremes") {
  CHECK(auc({0.9, 0.8, 0.2, 0.1}, {1.0, 1.0, 0.0, 0.0}) == 1.0);
  CHECK(auc({0.1, 0.2, 0.8, 0.9}, {1.0, 1.0, 0.0, 0.0}) == 0.0);
  // A constant scorer ties every pair.
  const AucFraction f = auc_fraction({0.4, 0.4, 0.4, 0.4, 0.4}, {1.0, 0.0, 1.0, 0.0, 0.0});
  CHECK(f.num2 == f.den);
  CHECK(f.value() == 0.5);
  // Halves: positives tie each other but split the negatives.
  CHECK(auc({0.5, 0.5}, {0.0, 1.0}) == 0.5);
}

TEST_CASE("rank formula equals brute-force pair counting") {
  Rng rng(53);
  std::vector<double> scores, labels;
  for (int round = 0; round < 40; ++round) {
    const std::size_t n = 2 + rng.below(399);
    tied_corpus(rng, n, scores, labels);
    const AucFraction fast = auc_fraction(scores, labels);
    const AucFraction slow = pairwise_oracle(scores, labels);
    REQUIRE(fast.den == slow.den);
    REQUIRE(fast.num2 == slow.num2);
  }
}

TEST_CASE("strictly increasing transforms leave the integers untouched") {
  Rng rng(59);
  std::vector<double> scores, labels;
  tied_corpus(rng, 300, scores, labels);
  const AucFraction base = auc_fraction(scores, labels);

  std::vector<double> warped(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) warped[i] = std::exp(scores[i]);
  AucFraction f = auc_fraction(warped, labels);
  CHECK(f.num2 == base.num2);
  CHECK(f.den == base.den);

  for (std::size_t i = 0; i < scores.size(); ++i) warped[i] = 3.0 * scores[i] - 7.0;
  f = auc_fraction(warped, labels);
  CHECK(f.num2 == base.num2);
  CHECK(f.den == base.den);
}

TEST_CASE("instance order does not matter") {
  Rng rng(61);
  std::vector<double> scores, labels;
  tied_corpus(rng, 200, scores, labels);
  const AucFraction base = auc_fraction(scores, labels);

  std::vector<std::size_t> perm(scores.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<double> s2(scores.size()), l2(labels.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    s2[i] = scores[perm[i]];
    l2[i] = labels[perm[i]];
  }
  const AucFraction f = auc_fraction(s2, l2);
  CHECK(f.num2 == base.num2);
  CHECK(f.den == base.den);
}

TEST_CASE("flipping every label mirrors the doubled count exactly") {
  Rng rng(67);
  std::vector<double> scores, labels;
  for (int round = 0; round < 20; ++round) {
    tied_corpus(rng, 2 + rng.below(250), scores, labels);
    const AucFraction f = auc_fraction(scores, labels);
    std::vector<double> flipped(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) flipped[i] = 1.0 - labels[i];
    const AucFraction g = auc_fraction(scores, flipped);
    CHECK(g.den == f.den);
    CHECK(g.num2 == 2 * f.den - f.num2);
  }
}

TEST_CASE("degenerate ranking inputs are rejected") {
  CHECK_THROWS_AS(auc_fraction({0.1, 0.2}, {1.0, 1.0}), DataError);
  CHECK_THROWS_AS(auc_fraction({0.1, 0.2}, {0.0, 0.0}), DataError);
  CHECK_THROWS_AS(auc_fraction({}, {}), DataError);
  CHECK_THROWS_AS(auc_fraction({0.1, 0.2}, {0.0, 0.5}), DataError);
  CHECK_THROWS_AS(auc_fraction({std::nan(""), 0.2}, {0.0, 1.0}), DataError);
  CHECK_THROWS_AS(auc_fraction({0.1}, {0.0, 1.0}), ShapeError);
}

TEST_CASE("probability logloss basics") {
  CHECK(logloss({0.5, 0.5}, {1.0, 0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // Exact 0/1 scores are clamped at 1e-7 from the boundary.
  CHECK(logloss({1.0}, {1.0}) == doctest::Approx(-std::log1p(-1e-7)).epsilon(1e-9));
  CHECK(logloss({0.0}, {1.0}) == doctest::Approx(-std::log(1e-7)).epsilon(1e-12));
  // 1 - (1 - 1e-7) is not the double 1e-7 bit for bit, only close to it.
  CHECK(logloss({1.0}, {0.0}) == doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
  CHECK(std::isfinite(logloss({0.0, 1.0}, {1.0, 0.0})));
}

TEST_CASE("probability and logit forms agree away from the clamp") {
  Rng rng(71);
  std::vector<double> z(101), y(101), p(101);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = rng.uniform(-10.0, 10.0);
    y[i] = (rng.below(2) == 0) ? 0.0 : 1.0;
    p[i] = sigmoid(z[i]);
  }
  CHECK(std::fabs(logloss(p, y) - bce_loss(z, y).loss) < 1e-9);
}

TEST_CASE("logloss input validation") {
  CHECK_THROWS_AS(logloss({}, {}), ShapeError);
  CHECK_THROWS_AS(logloss({0.5}, {0.5, 1.0}), ShapeError);
  CHECK_THROWS_AS(logloss({0.5}, {0.3}), DataError);
}
