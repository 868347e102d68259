#pragma once

#include <cstddef>
#include <vector>

#include "stagesplat/raster.hpp"
#include "stagesplat/rng.hpp"
#include "stagesplat/scene.hpp"

namespace stagesplat {

struct DensifyConfig {
  long start_iter = 100;
  long end_iter = 900;
  long interval = 100;
  double grad_threshold = 2e-4;          // mean screen-space gradient norm, per-pixel normalized
  double opacity_prune_threshold = 0.01;
  std::size_t max_gaussians = 200000;
  double split_scale_fraction = 0.01;    // of scene extent; larger Gaussians split, smaller clone
  double split_shrink = 1.6;
  bool enabled = true;

  void validate() const;  // throws ValidationError
  bool is_refinement_iteration(long iter) const;
};

/// Running per-Gaussian screen-space gradient statistics.
struct DensifyStats {
  std::vector<double> grad_sum;
  std::vector<long> count;

  void reset(std::size_t n);
  void accumulate(const CloudGradients& g, double scale);
  double mean(std::size_t i) const { return count[i] > 0 ? grad_sum[i] / static_cast<double>(count[i]) : 0.0; }
};

struct DensifyReport {
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
  bool prune_only = false;
  /// For each Gaussian of the new cloud, the old index it inherits optimizer
  /// state from, or -1 for a newly created Gaussian.
  std::vector<long> source;
};

/// Clones small and splits large high-gradient Gaussians, removes
/// low-opacity ones and rebuilds the (contiguous) partitions. New Gaussians
/// belong to their source's object. Falls back to prune-only when growth
/// would exceed max_gaussians.
DensifyReport densify_and_prune(GaussianCloud& cloud, const DensifyStats& stats, const DensifyConfig& config,
                                double scene_extent, Rng& rng);

}  // namespace stagesplat
