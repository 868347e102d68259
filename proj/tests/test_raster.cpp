#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "stagesplat/raster.hpp"

using namespace stagesplat;

namespace {

GaussianCloud single_gaussian(const Vec3& mean, double sigma, double opacity, const Vec3& rgb) {
  GaussianCloud c;
  c.means = {mean};
  c.log_scales = {Vec3::Constant(std::log(sigma))};
  c.rotations = {Quat4(1, 0, 0, 0)};
  c.opacity_logits = {logit(opacity)};
  c.colors = {Vec3(logit(rgb.x()), logit(rgb.y()), logit(rgb.z()))};
  c.partitions = {{"a", 0, 1}};
  c.translations = {Vec3::Zero()};
  return c;
}

Splat2D make_splat(double x, double y, double depth, double alpha, const Eigen::Vector3d& color, std::size_t idx,
                   double conic = 0.5) {
  Splat2D s;
  s.mean_2d = {x, y};
  s.conic = {conic, 0.0, conic};
  s.depth = depth;
  s.alpha_max = alpha;
  s.color = color;
  s.source_index = idx;
  s.radius = 3.0 * std::sqrt(1.0 / conic);
  return s;
}

}  // namespace

TEST_CASE("projection of a centered isotropic Gaussian") {
  CameraIntrinsics intr;
  intr.width = intr.height = 64;
  ViewSample v;
  v.radius = 3;
  v.azimuth = 37;
  v.elevation = 12;
  const GaussianCloud c = single_gaussian(Vec3::Zero(), 0.1, 0.5, Vec3(0.2, 0.4, 0.6));
  const auto splats = project(c, c.all_objects(), pose_from_view(v, intr), intr);
  REQUIRE(splats.size() == 1);
  const Splat2D& s = splats[0];
  CHECK(s.mean_2d.x() == doctest::Approx(32.0));
  CHECK(s.mean_2d.y() == doctest::Approx(32.0));
  CHECK(std::abs(s.conic[1]) < 1e-12);
  CHECK(s.conic[0] == doctest::Approx(s.conic[2]));
  // Screen sigma^2 = (f * sigma / r)^2 + 0.3
  const double f = intr.focal_y();
  CHECK(1.0 / s.conic[0] == doctest::Approx(std::pow(f * 0.1 / 3.0, 2) + 0.3));
  CHECK(s.depth == doctest::Approx(3.0));
  CHECK(s.color.isApprox(Eigen::Vector3d(0.2, 0.4, 0.6)));
}

TEST_CASE("culling") {
  CameraIntrinsics intr;
  ViewSample v;
  v.radius = 3;
  SUBCASE("behind the camera") {
    const GaussianCloud c = single_gaussian(Vec3(6, 0, 0), 0.1, 0.5, Vec3::Constant(0.5));
    CHECK(project(c, c.all_objects(), pose_from_view(v, intr), intr).empty());
  }
  SUBCASE("far outside the frustum") {
    const GaussianCloud c = single_gaussian(Vec3(0, 30, 0), 0.1, 0.5, Vec3::Constant(0.5));
    CHECK(project(c, c.all_objects(), pose_from_view(v, intr), intr).empty());
  }
}

TEST_CASE("doubling the camera distance halves the screen sigma") {
  CameraIntrinsics intr;
  ViewSample v;
  v.radius = 4;
  const GaussianCloud c = single_gaussian(Vec3::Zero(), 0.05, 0.5, Vec3::Constant(0.5));
  auto screen_sigma = [&](double r) {
    v.radius = r;
    const auto s = project(c, c.all_objects(), pose_from_view(v, intr), intr);
    return std::sqrt(1.0 / s.at(0).conic[0] - 0.3);
  };
  CHECK(screen_sigma(8) / screen_sigma(4) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("compositing closed forms") {
  CameraIntrinsics intr;
  intr.width = intr.height = 16;
  const Eigen::Vector3d bg(0.3, 0.6, 0.9), c1(1, 0, 0.2), c2(0, 1, 0.4);
  SUBCASE("two coincident half-opaque splats") {
    std::vector<Splat2D> s{make_splat(8.5, 8.5, 2.0, 0.5, c2, 1), make_splat(8.5, 8.5, 1.0, 0.5, c1, 0)};
    const RenderOutput r = composite(s, intr, bg);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(r.pixel(8, 8, k) - (0.5 * c1[k] + 0.25 * c2[k] + 0.25 * bg[k])) < 1e-12);
    CHECK(r.alpha[8 * 16 + 8] == doctest::Approx(0.75));
  }
  SUBCASE("nearly opaque splat hides the background") {
    std::vector<Splat2D> s{make_splat(8.5, 8.5, 1.0, 1.0, c1, 0)};
    const RenderOutput r = composite(s, intr, bg);
    for (int k = 0; k < 3; ++k) CHECK(r.pixel(8, 8, k) == doctest::Approx(0.999 * c1[k] + 0.001 * bg[k]));
  }
  SUBCASE("empty list is background") {
    const RenderOutput r = composite({}, intr, bg);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        for (int k = 0; k < 3; ++k) CHECK(r.pixel(x, y, k) == bg[k]);
        CHECK(r.alpha[y * 16 + x] == 0.0);
      }
  }
  SUBCASE("depth ties resolve by source index") {
    std::vector<Splat2D> s{make_splat(8.5, 8.5, 1.0, 0.5, c2, 7), make_splat(8.5, 8.5, 1.0, 0.5, c1, 3)};
    const RenderOutput r = composite(s, intr, bg);
    const auto contrib = pixel_contributions(r, 8, 8);
    REQUIRE(contrib.size() == 2);
    CHECK(contrib[0].source_index == 3);
  }
}

TEST_CASE("render matches the naive reference renderer") {
  std::mt19937_64 gen(17);
  CameraIntrinsics intr;
  intr.width = 48;
  intr.height = 40;
  RasterSettings exact;
  exact.cutoff_sigma = 0;
  exact.early_termination = false;
  for (int s = 0; s < 10; ++s) {
    const GaussianCloud c = oracle::random_cloud(gen, 12);
    ViewSample v;
    v.azimuth = -150 + 30 * s;
    v.elevation = 5 * s - 10;
    v.radius = 2.5;
    const Eigen::Vector3d bg(0.2, 0.5, 0.7);
    const RenderOutput r = render(c, c.all_objects(), v, intr, bg, exact);
    const auto ref = oracle::ref_render(c, c.all_objects(), v, intr, bg);
    double worst = 0;
    for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(ref[k] - r.image[k]));
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("render subset and translation semantics") {
  std::mt19937_64 gen(3);
  GaussianCloud c = oracle::random_cloud(gen, 6);
  c.translations = {Vec3::Zero(), Vec3::Zero()};
  CameraIntrinsics intr;
  intr.width = intr.height = 32;
  ViewSample v;
  v.radius = 3;
  const Eigen::Vector3d bg = Eigen::Vector3d::Constant(0.5);
  const std::vector<std::size_t> only_a{0};
  const RenderOutput a = render(c, only_a, v, intr, bg);
  GaussianCloud just_a = c.subset(0);
  const RenderOutput a2 = render(just_a, just_a.all_objects(), v, intr, bg);
  CHECK(a.image == a2.image);

  GaussianCloud shifted = c;
  shifted.translations[1] = Vec3(0.2, -0.1, 0.05);
  GaussianCloud baked = c;
  for (std::size_t i = c.partitions[1].begin; i < c.partitions[1].end; ++i) baked.means[i] += shifted.translations[1];
  const auto r1 = render(shifted, shifted.all_objects(), v, intr, bg).image;
  const auto r2 = render(baked, baked.all_objects(), v, intr, bg).image;
  for (std::size_t k = 0; k < r1.size(); ++k) CHECK(std::abs(r1[k] - r2[k]) < 1e-12);
}

TEST_CASE("render is deterministic and independent of thread count") {
  std::mt19937_64 gen(8);
  const GaussianCloud c = oracle::random_cloud(gen, 40);
  CameraIntrinsics intr;
  intr.width = intr.height = 64;
  ViewSample v;
  v.radius = 2;
  const Eigen::Vector3d bg = Eigen::Vector3d::Constant(0.4);
  std::vector<double> g(64 * 64 * 3, 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = std::sin(0.37 * static_cast<double>(k));
  setenv("SPLAT_THREADS", "1", 1);
  const auto img1 = render(c, c.all_objects(), v, intr, bg).image;
  const auto gr1 = backward(c, c.all_objects(), v, intr, bg, g);
  setenv("SPLAT_THREADS", "4", 1);
  const auto img4 = render(c, c.all_objects(), v, intr, bg).image;
  const auto gr4 = backward(c, c.all_objects(), v, intr, bg, g);
  unsetenv("SPLAT_THREADS");
  CHECK(img1 == img4);
  CHECK(gr1.means == gr4.means);
  CHECK(gr1.rotations == gr4.rotations);
  CHECK(gr1.translations == gr4.translations);
}

TEST_CASE("early termination changes the image by less than 2e-4") {
  std::mt19937_64 gen(21);
  CameraIntrinsics intr;
  intr.width = intr.height = 32;
  RasterSettings no_early;
  no_early.early_termination = false;
  for (int s = 0; s < 5; ++s) {
    GaussianCloud c = oracle::random_cloud(gen, 60);
    for (auto& o : c.opacity_logits) o = 4.0;
    ViewSample v;
    v.radius = 2.5;
    v.azimuth = 40.0 * s;
    const Eigen::Vector3d bg(0.1, 0.9, 0.5);
    const auto a = render(c, c.all_objects(), v, intr, bg).image;
    const auto b = render(c, c.all_objects(), v, intr, bg, no_early).image;
    double worst = 0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    CHECK(worst < 2e-4);
  }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  std::mt19937_64 gen(2);
  const GaussianCloud c = oracle::random_cloud(gen, 5);
  CameraIntrinsics intr;
  intr.width = intr.height = 32;
  ViewSample v;
  v.radius = 3;
  const std::vector<double> g(32 * 32 * 3, 0.0);
  const CloudGradients gr = backward(c, c.all_objects(), v, intr, Eigen::Vector3d::Constant(0.5), g);
  CHECK(gr.squared_norm() == 0.0);
}

TEST_CASE("analytic gradients match central differences") {
  // 40 scenes give at least 200 checked entries for every parameter class.
  const oracle::GradCheckResult r = oracle::gradient_check(40, 1234);
  CHECK(r.translation_sum_exact);
  for (const auto& c : r.classes) {
    INFO(c.name << " worst relative error " << c.worst);
    CHECK(c.checked >= 200);
    CHECK(c.failed == 0);
  }
}

TEST_CASE("restrict_to zeroes everything outside the listed objects") {
  std::mt19937_64 gen(4);
  const GaussianCloud c = oracle::random_cloud(gen, 8);
  CameraIntrinsics intr;
  intr.width = intr.height = 32;
  ViewSample v;
  v.radius = 3;
  std::vector<double> g(32 * 32 * 3, 1.0);
  CloudGradients gr = backward(c, c.all_objects(), v, intr, Eigen::Vector3d::Constant(0.5), g);
  const std::vector<std::size_t> keep{1};
  gr.restrict_to(c, keep);
  for (std::size_t i = 0; i < c.partitions[0].end; ++i) {
    CHECK(gr.means[i] == Vec3::Zero());
    CHECK(gr.opacity_logits[i] == 0.0);
  }
  CHECK(gr.translations[0] == Vec3::Zero());
}
