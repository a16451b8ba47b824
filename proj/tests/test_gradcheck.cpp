#include <doctest.h>

#include <cmath>
#include <limits>

#include "finalmlp/gradcheck.hpp"

using namespace finalmlp;

TEST_CASE("analytic gradient of p^2 at p=1 passes with tiny error") {
  Param p("p", 1, 1);
  p.value[0] = 1.0;
  p.grad[0] = 2.0;
  const auto loss = [&]() { return p.value[0] * p.value[0]; };
  const GradCheckReport rep = check_gradients({&p}, loss);
  REQUIRE(rep.entries.size() == 1);
  CHECK(rep.max_rel_err < 1e-8);
  CHECK(rep.passed(1e-4));
}

TEST_CASE("a corrupted gradient is flagged with its coordinate") {
  Param p("w", 1, 3);
  for (int i = 0; i < 3; ++i) p.value[i] = 0.5 + i;
  // loss = sum of squares; corrupt the middle coordinate's gradient.
  p.grad[0] = 2.0 * p.value[0];
  p.grad[1] = 4.0 * p.value[1];
  p.grad[2] = 2.0 * p.value[2];
  const auto loss = [&]() {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) acc += p.value[i] * p.value[i];
    return acc;
  };
  const GradCheckReport rep = check_gradients({&p}, loss);
  CHECK(!rep.passed(1e-4));
  CHECK(rep.entries[0].worst_coord == 1);
  CHECK(rep.entries[0].max_rel_err == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("coordinate subsampling is deterministic and bounded") {
  Param p("big", 10, 10);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p.value[i] = 0.01 * double(i);
    p.grad[i] = 2.0 * p.value[i];
  }
  const auto loss = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += p.value[i] * p.value[i];
    return acc;
  };
  GradCheckOptions opts;
  opts.max_coords_per_param = 7;
  const GradCheckReport r1 = check_gradients({&p}, loss, opts);
  const GradCheckReport r2 = check_gradients({&p}, loss, opts);
  CHECK(r1.entries[0].coords_checked == 7);
  CHECK(r1.entries[0].max_rel_err == r2.entries[0].max_rel_err);
  CHECK(r1.passed(1e-4));
}

TEST_CASE("a non-finite loss is an error, not a silent pass") {
  Param p("p", 1, 1);
  p.value[0] = 1.0;
  p.grad[0] = 0.0;
  const auto loss = [&]() { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(check_gradients({&p}, loss), NumericError);
}

TEST_CASE("options are validated and parameters restored after probing") {
  Param p("p", 1, 2);
  p.value[0] = 0.25;
  p.value[1] = -0.75;
  const auto loss = [&]() { return p.value[0] + p.value[1]; };
  p.grad[0] = p.grad[1] = 1.0;

  GradCheckOptions bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(check_gradients({&p}, loss, bad), ConfigError);

  check_gradients({&p}, loss);
  CHECK(p.value[0] == 0.25);
  CHECK(p.value[1] == -0.75);
}
