#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stagesplat/raster.hpp"
#include "stagesplat/scene.hpp"

namespace stagesplat {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-15;
};

/// One reference Adam step on a scalar; `step` is the 1-based step index.
void adam_scalar_update(double& param, double grad, double& m, double& v, long step, double lr, const AdamHyper& h);

struct LearningRates {
  double mean_init = 1.6e-4;
  double mean_final = 1.6e-6;
  double mean_extent_scale = 1.0;  // multiplies both mean rates (scene extent)
  double color = 2.5e-3;
  double opacity = 5e-2;
  double scale = 5e-3;
  double rotation = 1e-3;
  double translation = 1e-2;

  /// Log-linear decay of the mean rate over [0, total_iters].
  double mean_at(long iter, long total_iters) const;
};

/// Adam moments mirroring every parameter array, with per-object step
/// counters so an object that is not being optimized keeps its state and
/// parameters untouched.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const GaussianCloud& cloud);

  /// Updates the Gaussians of `objects` (not translations).
  void step_gaussians(GaussianCloud& cloud, const CloudGradients& grads, std::span<const std::size_t> objects,
                      double mean_lr, const LearningRates& lr);
  /// Updates the translations of `objects` only.
  void step_translations(GaussianCloud& cloud, const CloudGradients& grads, std::span<const std::size_t> objects,
                         double lr);

  /// Rebuilds moments after densify/prune. source[i] is the pre-mutation
  /// index whose moments Gaussian i inherits, or -1 for fresh zero moments.
  void remap(std::span<const long> source, std::size_t object_count);

  std::size_t size() const { return m_means_.size(); }
  long gaussian_steps(std::size_t object) const { return steps_.at(object); }
  long translation_steps(std::size_t object) const { return translation_steps_.at(object); }
  /// True when every moment array has n entries and there are `objects` counters.
  bool aligned_with(std::size_t n, std::size_t objects) const;

  AdamHyper hyper;

 private:
  std::vector<Eigen::Vector3d> m_means_, v_means_, m_scales_, v_scales_, m_colors_, v_colors_;
  std::vector<Eigen::Vector4d> m_rot_, v_rot_;
  std::vector<double> m_opacity_, v_opacity_;
  std::vector<Eigen::Vector3d> m_trans_, v_trans_;
  std::vector<long> steps_, translation_steps_;
};

}  // namespace stagesplat
