#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stagesplat/camera.hpp"
#include "stagesplat/scene.hpp"

namespace stagesplat {

struct RasterSettings {
  /// Support of each splat in standard deviations; <= 0 means unbounded.
  double cutoff_sigma = 3.0;
  /// Stop compositing a pixel once transmittance drops below 1e-4.
  bool early_termination = true;
  int tile_size = 16;
};

inline constexpr double kAlphaClamp = 0.999;
inline constexpr double kLowPass = 0.3;
inline constexpr double kMinTransmittance = 1e-4;

struct Splat2D {
  Eigen::Vector2d mean_2d = Eigen::Vector2d::Zero();
  Eigen::Vector3d conic = Eigen::Vector3d::Zero();  // (A, B, C) of [[A, B], [B, C]]
  double depth = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double alpha_max = 0.0;
  std::size_t source_index = 0;
  double radius = 0.0;  // bounding radius in pixels; infinite when unbounded
};

struct RenderOutput {
  int width = 0;
  int height = 0;
  std::vector<double> image;  // H*W*3, row-major
  std::vector<double> alpha;  // H*W
  std::vector<Splat2D> splats;                         // depth sorted
  std::vector<std::vector<std::uint32_t>> tile_lists;  // indices into splats

  double pixel(int x, int y, int c) const { return image[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Projects the given Gaussians (translations applied) to screen space with
/// the EWA linearization. Culls behind the near plane, beyond far, and
/// outside the frustum with a 3 sigma margin. Output is depth sorted with
/// ties broken by source index.
std::vector<Splat2D> project(const GaussianCloud& cloud, std::span<const std::size_t> subset, const CameraPose& pose,
                             const CameraIntrinsics& intr, const RasterSettings& settings = {});

/// Front-to-back alpha compositing over a solid background. Splats are put
/// in (depth, source index) order first if they are not already.
RenderOutput composite(std::vector<Splat2D> splats, const CameraIntrinsics& intr, const Eigen::Vector3d& background,
                       const RasterSettings& settings = {});

/// project + composite for the Gaussians of the listed objects.
RenderOutput render(const GaussianCloud& cloud, std::span<const std::size_t> objects, const ViewSample& view,
                    const CameraIntrinsics& intr, const Eigen::Vector3d& background,
                    const RasterSettings& settings = {});

struct PixelContribution {
  std::size_t source_index = 0;
  double alpha = 0.0;
  double transmittance = 0.0;  // before this splat
};

/// The splats blended into pixel (x, y) in compositing order. `settings`
/// must match the ones used to produce `r`.
std::vector<PixelContribution> pixel_contributions(const RenderOutput& r, int x, int y,
                                                   const RasterSettings& settings = {});

/// Gradients shaped like the cloud; zero for Gaussians outside the render.
struct CloudGradients {
  std::vector<Eigen::Vector3d> means;
  std::vector<Eigen::Vector3d> log_scales;
  std::vector<Eigen::Vector4d> rotations;
  std::vector<double> opacity_logits;
  std::vector<Eigen::Vector3d> colors;
  std::vector<Eigen::Vector3d> translations;
  /// Screen-space mean gradient norm per Gaussian (densification statistic).
  std::vector<double> mean_2d_norm;

  explicit CloudGradients(std::size_t n = 0, std::size_t objects = 0);
  void resize(std::size_t n, std::size_t objects);
  void set_zero();
  /// this += w * other.
  void add_scaled(const CloudGradients& other, double w);
  /// Zeroes every Gaussian outside the listed objects.
  void restrict_to(const GaussianCloud& cloud, std::span<const std::size_t> objects);
  double squared_norm() const;
};

/// Exact gradient of <grad_image, image> with respect to every parameter of
/// the rendered Gaussians, chained through sigmoid, exp and quaternion
/// normalization. Translation gradients sum mean gradients per partition.
CloudGradients backward(const GaussianCloud& cloud, std::span<const std::size_t> objects, const ViewSample& view,
                        const CameraIntrinsics& intr, const Eigen::Vector3d& background,
                        std::span<const double> grad_image, const RasterSettings& settings = {});

}  // namespace stagesplat
