#pragma once

#include <string_view>

#include <Eigen/Core>

#include "stagesplat/rng.hpp"

namespace stagesplat {

struct CameraIntrinsics {
  int width = 256;
  int height = 256;
  double fov_y_deg = 49.1;
  double near = 0.01;
  double far = 100.0;

  void validate() const;  // throws ValidationError
  double focal_y() const;
  double focal_x() const;
};

/// Spherical viewpoint around look_at. Azimuth 0 lies along +x, +z is up.
struct ViewSample {
  double azimuth = 0.0;    // degrees in [-180, 180]
  double elevation = 0.0;  // degrees
  double radius = 1.0;
  Eigen::Vector3d look_at = Eigen::Vector3d::Zero();
};

struct ViewSamplingConfig {
  double azimuth_min = -180.0;
  double azimuth_max = 180.0;
  double elevation_min = -10.0;
  double elevation_max = 45.0;
  double radius_min = 1.0;
  double radius_max = 1.0;

  void validate() const;  // throws ValidationError
};

/// World-to-camera rigid transform plus pinhole constants. Camera axes are
/// x right, y down, z forward (toward look_at).
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const { return rotation * world + translation; }
  /// Pixel coordinates; pixel (i, j) covers [i, i+1) x [j, j+1).
  Eigen::Vector2d project(const Eigen::Vector3d& world) const;
};

ViewSample sample_view(Rng& rng, const ViewSamplingConfig& config, const Eigen::Vector3d& look_at);
CameraPose pose_from_view(const ViewSample& v, const CameraIntrinsics& intr);

/// Camera distance at which a sphere of the given radius spans `fill` of the
/// image height.
double fit_distance(double bounding_radius, const CameraIntrinsics& intr, double fill = 0.7);

double wrap_degrees(double deg);
/// psi - phi wrapped into [-180, 180).
double corrected_azimuth(double psi, double phi_offset);

enum class ViewBin { Front, Side, Back, Overhead };
std::string_view to_string(ViewBin b);
ViewBin bin_view(double corrected_azimuth_deg, double elevation_deg);

}  // namespace stagesplat
