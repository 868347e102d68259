#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stagesplat/adam.hpp"

using namespace stagesplat;

TEST_CASE("scalar Adam matches the reference recurrence") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(0, 1);
  AdamHyper h;
  h.eps = 1e-8;
  double x = 0.3, m = 0, v = 0, rx = 0.3, rm = 0, rv = 0;
  for (int t = 1; t <= 500; ++t) {
    const double g = nd(gen) + 0.1 * x;
    adam_scalar_update(x, g, m, v, t, 1e-2, h);
    oracle::ref_adam(rx, g, rm, rv, t, 1e-2, 0.9, 0.999, 1e-8);
    CHECK(std::abs(x - rx) < 1e-12);
  }
}

TEST_CASE("learning-rate decay is log-linear from initial to final") {
  LearningRates lr;
  CHECK(lr.mean_at(0, 1000) == doctest::Approx(1.6e-4));
  CHECK(lr.mean_at(1000, 1000) == doctest::Approx(1.6e-6));
  CHECK(lr.mean_at(500, 1000) == doctest::Approx(1.6e-5));
}

TEST_CASE("AdamState updates only the listed objects") {
  std::mt19937_64 gen(1);
  GaussianCloud c = oracle::random_cloud(gen, 6);
  AdamState adam(c);
  CHECK(adam.aligned_with(6, 2));
  CloudGradients g(6, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    g.means[i] = Vec3(1, -1, 0.5);
    g.colors[i] = Vec3(0.2, 0.2, 0.2);
    g.rotations[i] = Quat4(0.1, 0.2, 0.3, 0.4);
  }
  const GaussianCloud before = c;
  const std::vector<std::size_t> only_b{1};
  adam.step_gaussians(c, g, only_b, 1e-3, LearningRates{});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(c.means[i] == before.means[i]);
    CHECK(c.rotations[i] == before.rotations[i]);
    CHECK(c.colors[i] == before.colors[i]);
  }
  for (std::size_t i = 3; i < 6; ++i) {
    CHECK(c.means[i] != before.means[i]);
    CHECK(c.rotations[i].norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(adam.gaussian_steps(0) == 0);
  CHECK(adam.gaussian_steps(1) == 1);
  CHECK(c.translations == before.translations);

  g.translations[0] = Vec3(1, 0, 0);
  const std::vector<std::size_t> only_a{0};
  adam.step_translations(c, g, only_a, 1e-2);
  // First bias-corrected Adam step has magnitude lr in each nonzero coordinate.
  CHECK(c.translations[0].x() == doctest::Approx(before.translations[0].x() - 1e-2));
  CHECK(c.translations[0].y() == before.translations[0].y());
  CHECK(c.translations[1] == before.translations[1]);
  CHECK(c.means == std::vector<Vec3>(c.means));
}

TEST_CASE("moment remap keeps inherited state and zeroes new entries") {
  std::mt19937_64 gen(2);
  GaussianCloud c = oracle::random_cloud(gen, 4);
  AdamState adam(c);
  const std::vector<long> src{0, 2, -1, 3, 1};
  adam.remap(src, 2);
  CHECK(adam.aligned_with(5, 2));
  CHECK_FALSE(adam.aligned_with(4, 2));
}
