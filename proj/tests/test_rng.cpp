#include <doctest.h>

#include <cmath>
#include <vector>

#include "tesim/rng.hpp"

using tesim::Rng;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("inverse normal cdf round-trips against erfc") {
  // Grid spanning the central region and both tails.
  const std::vector<double> probs = {1e-12, 1e-9,  1e-6, 1e-3, 0.01, 0.1,  0.25, 0.5,
                                     0.75,  0.9,   0.99, 1.0 - 1e-3, 1.0 - 1e-6, 1.0 - 1e-9};
  for (double p : probs) {
    const double x = tesim::inverse_normal_cdf(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(tesim::inverse_normal_cdf(0.5) == 0.0);
  CHECK(tesim::inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK_THROWS_AS(tesim::inverse_normal_cdf(0.0), std::domain_error);
  CHECK_THROWS_AS(tesim::inverse_normal_cdf(1.0), std::domain_error);
}

TEST_CASE("streams are reproducible and seed derivation separates indices") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  CHECK(tesim::derive_seed(1, 0) != tesim::derive_seed(1, 1));
  CHECK(tesim::derive_seed(1, 0) != tesim::derive_seed(2, 0));

  Rng c(tesim::derive_seed(7, 3)), d(tesim::derive_seed(7, 3));
  for (int i = 0; i < 100; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("clipped normals stay within the clip and keep moments") {
  Rng rng(2024);
  double sum = 0.0, sum2 = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const double z = rng.clipped_normal(8.0);
    CHECK(std::abs(z) <= 8.0);
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / draws;
  const double var = sum2 / draws - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(draws)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}
