#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "stagesplat/camera.hpp"
#include "stagesplat/scene.hpp"

namespace stagesplat {

using Image = std::vector<double>;  // H*W*3, row-major, values in [0,1]

enum class PromptKind { Object, Edge, Scene };

/// A guidance condition: an object prompt (view conditioned), an edge prompt
/// or the global scene prompt. `subject` indexes spec.objects or spec.edges.
struct GuidancePrompt {
  PromptKind kind = PromptKind::Scene;
  std::size_t subject = 0;
  bool view_conditioned = false;
  std::vector<std::size_t> negative_objects;
};

GuidancePrompt object_prompt(const SceneSpec& spec, std::size_t object);
GuidancePrompt edge_prompt(std::size_t edge);
GuidancePrompt scene_prompt();

/// Deterministic stand-in for a learned image prior. Every target is an
/// analytic ray cast of one hidden ground-truth arrangement: solid primitives
/// in their hint color at their spec placement, each with a contrasting
/// marker patch on its canonical front (world azimuth = azimuth offset), so
/// targets of all prompts agree wherever they overlap.
///
/// Object targets show only that object, in its own orientation, as seen from
/// the sampled view. With conflict_delta > 0 the object target shows the
/// object displaced by delta, outward from the scene centroid, which makes
/// object and edge targets disagree.
class TargetField {
 public:
  TargetField(SceneSpec spec, CameraIntrinsics intr, double conflict_delta = 0.0, int supersample = 2);

  const SceneSpec& spec() const { return spec_; }
  const CameraIntrinsics& intrinsics() const { return intr_; }
  double conflict_delta() const { return delta_; }

  Image target(const GuidancePrompt& prompt, const ViewSample& view, const Eigen::Vector3d& background) const;
  Image object_target(std::size_t object, const ViewSample& view, const Eigen::Vector3d& background) const;
  Image edge_target(std::size_t edge, const ViewSample& view, const Eigen::Vector3d& background) const;
  Image scene_target(const ViewSample& view, const Eigen::Vector3d& background) const;

  /// Front/side/back/overhead bin of the view in the object's own frame.
  ViewBin object_view_bin(std::size_t object, const ViewSample& view) const;
  /// Fractional coverage (H*W) of the object-prompt target.
  std::vector<double> object_coverage(std::size_t object, const ViewSample& view) const;
  /// Per pixel, the index of the nearest visible object (or -1) in the
  /// ground-truth arrangement restricted to `objects`.
  std::vector<int> visible_object_map(const std::vector<std::size_t>& objects, const ViewSample& view) const;

  /// Camera anchors: object center, pair midpoint, object centroid.
  Eigen::Vector3d object_anchor(std::size_t object) const;
  Eigen::Vector3d edge_anchor(std::size_t edge) const;
  Eigen::Vector3d scene_anchor() const;
  /// Bounding radius of the subject around its anchor.
  double object_extent(std::size_t object) const;
  double edge_extent(std::size_t edge) const;
  double scene_extent() const;

  /// Unit horizontal direction of the conflict displacement for an object.
  Eigen::Vector3d conflict_direction(std::size_t object) const;

 private:
  struct Solid {
    std::size_t object;
    Eigen::Vector3d center;
    double marker_azimuth_deg;
  };
  Image cast(const std::vector<Solid>& solids, const ViewSample& view, const Eigen::Vector3d& background,
             std::vector<double>* coverage, std::vector<int>* ids) const;
  Solid object_solid(std::size_t object) const;

  SceneSpec spec_;
  CameraIntrinsics intr_;
  double delta_;
  int supersample_;
};

/// Intersection-over-union of two coverage maps thresholded at 0.5.
double silhouette_iou(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace stagesplat
