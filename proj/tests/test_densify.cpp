#include <doctest.h>

#include <cmath>

#include "stagesplat/densify.hpp"
#include "stagesplat/error.hpp"

using namespace stagesplat;

namespace {

GaussianCloud grid_cloud(std::size_t per_object, std::size_t objects) {
  GaussianCloud c;
  for (std::size_t o = 0; o < objects; ++o) {
    const std::size_t begin = c.size();
    for (std::size_t i = 0; i < per_object; ++i) {
      c.means.emplace_back(static_cast<double>(i), static_cast<double>(o), 0.0);
      c.log_scales.push_back(Vec3::Constant(std::log(0.001)));
      c.rotations.emplace_back(1, 0, 0, 0);
      c.opacity_logits.push_back(logit(0.5));
      c.colors.emplace_back(0, 0, 0);
    }
    c.partitions.push_back({"o" + std::to_string(o), begin, c.size()});
    c.translations.push_back(Vec3::Zero());
  }
  return c;
}

DensifyStats stats_with(std::size_t n, std::size_t hot, double value) {
  DensifyStats s;
  s.reset(n);
  s.grad_sum[hot] = value;
  s.count[hot] = 1;
  return s;
}

}  // namespace

TEST_CASE("refinement schedule") {
  DensifyConfig cfg;
  CHECK_FALSE(cfg.is_refinement_iteration(0));
  CHECK(cfg.is_refinement_iteration(100));
  CHECK_FALSE(cfg.is_refinement_iteration(150));
  CHECK(cfg.is_refinement_iteration(900));
  CHECK_FALSE(cfg.is_refinement_iteration(1000));
  DensifyConfig bad;
  bad.start_iter = 900;
  bad.end_iter = 100;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = DensifyConfig{};
  bad.interval = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("nothing above threshold and nothing transparent leaves the cloud unchanged") {
  GaussianCloud c = grid_cloud(10, 2);
  const GaussianCloud before = c;
  DensifyStats s;
  s.reset(c.size());
  Rng rng(1);
  const DensifyReport r = densify_and_prune(c, s, DensifyConfig{}, 1.0, rng);
  CHECK(r.cloned + r.split + r.pruned == 0);
  CHECK(c.means == before.means);
  CHECK(c.partitions.size() == 2);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(r.source[i] == static_cast<long>(i));
}

TEST_CASE("one split grows only its own partition by one") {
  GaussianCloud c = grid_cloud(10, 2);
  c.log_scales[3] = Vec3::Constant(std::log(0.5));
  Rng rng(1);
  const DensifyReport r = densify_and_prune(c, stats_with(20, 3, 1.0), DensifyConfig{}, 1.0, rng);
  CHECK(r.split == 1);
  CHECK(c.size() == 21);
  CHECK(c.partitions[0].size() == 11);
  CHECK(c.partitions[1].size() == 10);
  CHECK(c.log_scales[3].x() == doctest::Approx(std::log(0.5 / 1.6)));
  CHECK(c.log_scales[10].x() == doctest::Approx(std::log(0.5 / 1.6)));
  CHECK(r.source[3] == -1);
  CHECK(r.source[10] == -1);
  CHECK(r.source[11] == 10);
  CHECK(c.means[11] == Vec3(0, 1, 0));
}

TEST_CASE("one clone keeps the original and appends a copy") {
  GaussianCloud c = grid_cloud(10, 2);
  Rng rng(1);
  const DensifyReport r = densify_and_prune(c, stats_with(20, 14, 1.0), DensifyConfig{}, 1.0, rng);
  CHECK(r.cloned == 1);
  CHECK(c.partitions[1].size() == 11);
  CHECK(c.means[20] == c.means[14]);
  CHECK(r.source[14] == 14);
  CHECK(r.source[20] == -1);
}

TEST_CASE("pruning keeps only opaque Gaussians") {
  GaussianCloud c = grid_cloud(10, 2);
  for (auto& o : c.opacity_logits) o = logit(0.001);
  c.opacity_logits[2] = c.opacity_logits[15] = c.opacity_logits[16] = logit(0.5);
  DensifyStats s;
  s.reset(c.size());
  Rng rng(1);
  const DensifyReport r = densify_and_prune(c, s, DensifyConfig{}, 1.0, rng);
  CHECK(c.size() == 3);
  CHECK(r.pruned == 17);
  CHECK(c.partitions[0].size() == 1);
  CHECK(c.partitions[1].size() == 2);
  c.check_invariants();
}

TEST_CASE("growth beyond the cap falls back to prune-only") {
  GaussianCloud c = grid_cloud(10, 1);
  c.opacity_logits[0] = logit(0.001);
  DensifyStats s;
  s.reset(10);
  for (std::size_t i = 0; i < 10; ++i) {
    s.grad_sum[i] = 1.0;
    s.count[i] = 1;
  }
  DensifyConfig cfg;
  cfg.max_gaussians = 12;
  Rng rng(1);
  const DensifyReport r = densify_and_prune(c, s, cfg, 1.0, rng);
  CHECK(r.prune_only);
  CHECK(c.size() == 9);
}
