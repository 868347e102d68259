#include "stagesplat/camera.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "stagesplat/error.hpp"

namespace stagesplat {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

void CameraIntrinsics::validate() const {
  if (width < 8 || height < 8) throw ValidationError("image dimensions must be at least 8x8");
  if (!(fov_y_deg > 0.0 && fov_y_deg < 180.0)) throw ValidationError("fov_y must lie in (0, 180)");
  if (!(near > 0.0 && near < far)) throw ValidationError("clip planes must satisfy 0 < near < far");
}

double CameraIntrinsics::focal_y() const { return 0.5 * height / std::tan(0.5 * fov_y_deg * kDeg); }
double CameraIntrinsics::focal_x() const { return focal_y(); }

void ViewSamplingConfig::validate() const {
  if (!(azimuth_min <= azimuth_max) || azimuth_min < -180.0 || azimuth_max > 180.0)
    throw ValidationError("azimuth range must be ordered and within [-180, 180]");
  if (!(elevation_min <= elevation_max) || elevation_min < -90.0 || elevation_max > 90.0)
    throw ValidationError("elevation range must be ordered and within [-90, 90]");
  if (!(radius_min <= radius_max) || !(radius_min > 0.0)) throw ValidationError("radius range must be ordered and positive");
}

Eigen::Vector2d CameraPose::project(const Eigen::Vector3d& world) const {
  const Eigen::Vector3d c = to_camera(world);
  return {fx * c.x() / c.z() + cx, fy * c.y() / c.z() + cy};
}

ViewSample sample_view(Rng& rng, const ViewSamplingConfig& config, const Eigen::Vector3d& look_at) {
  config.validate();
  ViewSample v;
  v.azimuth = rng.uniform(config.azimuth_min, config.azimuth_max);
  v.elevation = rng.uniform(config.elevation_min, config.elevation_max);
  v.radius = rng.uniform(config.radius_min, config.radius_max);
  v.look_at = look_at;
  return v;
}

CameraPose pose_from_view(const ViewSample& v, const CameraIntrinsics& intr) {
  const double az = v.azimuth * kDeg, el = v.elevation * kDeg;
  const Eigen::Vector3d dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
  CameraPose pose;
  pose.position = v.look_at + v.radius * dir;
  const Eigen::Vector3d forward = -dir;
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  if (right.norm() < 1e-9) right = Eigen::Vector3d(-std::sin(az), std::cos(az), 0.0);  // looking straight down/up
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.translation = -pose.rotation * pose.position;
  pose.fx = intr.focal_x();
  pose.fy = intr.focal_y();
  pose.cx = 0.5 * intr.width;
  pose.cy = 0.5 * intr.height;
  return pose;
}

double fit_distance(double bounding_radius, const CameraIntrinsics& intr, double fill) {
  return bounding_radius / (fill * std::tan(0.5 * intr.fov_y_deg * kDeg));
}

double wrap_degrees(double deg) {
  double x = std::fmod(deg + 180.0, 360.0);
  if (x < 0.0) x += 360.0;
  return x - 180.0;
}

double corrected_azimuth(double psi, double phi_offset) { return wrap_degrees(psi - phi_offset); }

std::string_view to_string(ViewBin b) {
  switch (b) {
    case ViewBin::Front: return "front";
    case ViewBin::Side: return "side";
    case ViewBin::Back: return "back";
    case ViewBin::Overhead: return "overhead";
  }
  return "front";
}

ViewBin bin_view(double az, double elevation) {
  if (elevation > 60.0) return ViewBin::Overhead;
  const double a = std::abs(wrap_degrees(az));
  if (a <= 45.0) return ViewBin::Front;
  if (a >= 135.0) return ViewBin::Back;
  return ViewBin::Side;
}

}  // namespace stagesplat
