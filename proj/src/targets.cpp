#include "stagesplat/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace stagesplat {

using Eigen::Vector3d;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMarkerHalfAngle = 35.0;
constexpr double kMarkerHalfHeight = 0.6;

double hit_unit_sphere(const Vector3d& o, const Vector3d& d) {
  const double a = d.squaredNorm(), b = 2 * o.dot(d), c = o.squaredNorm() - 1;
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return kInf;
  const double t = (-b - std::sqrt(disc)) / (2 * a);
  return t > 0 ? t : kInf;
}

double hit_unit_box(const Vector3d& o, const Vector3d& d) {
  double t0 = -kInf, t1 = kInf;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (std::abs(o[k]) > 1) return kInf;
      continue;
    }
    double a = (-1 - o[k]) / d[k], b = (1 - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return (t1 >= t0 && t0 > 0) ? t0 : kInf;
}

double hit_unit_cylinder(const Vector3d& o, const Vector3d& d) {
  double best = kInf;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double b = 2 * (o.x() * d.x() + o.y() * d.y()), c = o.x() * o.x() + o.y() * o.y() - 1;
    const double disc = b * b - 4 * a * c;
    if (disc >= 0) {
      const double t = (-b - std::sqrt(disc)) / (2 * a);
      if (t > 0 && std::abs(o.z() + t * d.z()) <= 1) best = t;
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    for (double cap : {-1.0, 1.0}) {
      const double t = (cap - o.z()) / d.z();
      if (t > 0 && t < best) {
        const Vector3d p = o + t * d;
        if (p.x() * p.x() + p.y() * p.y() <= 1) best = t;
      }
    }
  }
  return best;
}

double intersect(const ObjectSpec& obj, const Vector3d& center, const Vector3d& origin, const Vector3d& dir,
                 Vector3d& local_hit) {
  const Eigen::Matrix3d rt = rotation_about_z(obj.orientation_deg).transpose();
  Vector3d o = rt * (origin - center) / obj.size;
  Vector3d d = rt * dir / obj.size;
  double t = kInf;
  switch (obj.primitive) {
    case Primitive::Sphere: t = hit_unit_sphere(o, d); break;
    case Primitive::Ellipsoid: {
      const Vector3d ax = ellipsoid_semi_axes();
      t = hit_unit_sphere(o.cwiseQuotient(ax), d.cwiseQuotient(ax));
      break;
    }
    case Primitive::Box: t = hit_unit_box(o, d); break;
    case Primitive::Cylinder: t = hit_unit_cylinder(o, d); break;
  }
  if (std::isfinite(t)) local_hit = o + t * d;
  return t;
}

Vector3d horizontal_unit(double azimuth_deg) {
  const double a = azimuth_deg * std::numbers::pi / 180.0;
  return {std::cos(a), std::sin(a), 0.0};
}

}  // namespace

GuidancePrompt object_prompt(const SceneSpec& spec, std::size_t object) {
  GuidancePrompt p{PromptKind::Object, object, true, {}};
  for (const auto& n : spec.objects.at(object).negatives) p.negative_objects.push_back(spec.object_index(n));
  return p;
}

GuidancePrompt edge_prompt(std::size_t edge) { return {PromptKind::Edge, edge, false, {}}; }
GuidancePrompt scene_prompt() { return {PromptKind::Scene, 0, false, {}}; }

TargetField::TargetField(SceneSpec spec, CameraIntrinsics intr, double conflict_delta, int supersample)
    : spec_(std::move(spec)), intr_(intr), delta_(conflict_delta), supersample_(std::max(1, supersample)) {
  validate(spec_);
  intr_.validate();
}

Vector3d TargetField::object_anchor(std::size_t object) const { return spec_.objects.at(object).center; }

Vector3d TargetField::edge_anchor(std::size_t edge) const {
  const auto& e = spec_.edges.at(edge);
  return 0.5 * (spec_.objects[spec_.object_index(e.src)].center + spec_.objects[spec_.object_index(e.dst)].center);
}

Vector3d TargetField::scene_anchor() const {
  Vector3d c = Vector3d::Zero();
  for (const auto& o : spec_.objects) c += o.center;
  return c / static_cast<double>(spec_.objects.size());
}

double TargetField::object_extent(std::size_t object) const { return bounding_radius(spec_.objects.at(object)); }

double TargetField::edge_extent(std::size_t edge) const {
  const auto& e = spec_.edges.at(edge);
  const Vector3d a = edge_anchor(edge);
  double r = 0;
  for (const auto& id : {e.src, e.dst}) {
    const auto& o = spec_.objects[spec_.object_index(id)];
    r = std::max(r, (o.center - a).norm() + bounding_radius(o));
  }
  return r;
}

double TargetField::scene_extent() const {
  const Vector3d a = scene_anchor();
  double r = 0;
  for (const auto& o : spec_.objects) r = std::max(r, (o.center - a).norm() + bounding_radius(o));
  return r;
}

Vector3d TargetField::conflict_direction(std::size_t object) const {
  Vector3d d = spec_.objects.at(object).center - scene_anchor();
  d.z() = 0;
  if (d.norm() < 1e-9) return Vector3d::UnitX();
  return d.normalized();
}

TargetField::Solid TargetField::object_solid(std::size_t object) const {
  const auto& obj = spec_.objects.at(object);
  return {object, obj.center + delta_ * conflict_direction(object), obj.azimuth_offset_deg};
}

ViewBin TargetField::object_view_bin(std::size_t object, const ViewSample& view) const {
  return bin_view(corrected_azimuth(view.azimuth, spec_.objects.at(object).azimuth_offset_deg), view.elevation);
}

Image TargetField::cast(const std::vector<Solid>& solids, const ViewSample& view, const Vector3d& background,
                        std::vector<double>* coverage, std::vector<int>* ids) const {
  const CameraPose pose = pose_from_view(view, intr_);
  const Eigen::Matrix3d cam_to_world = pose.rotation.transpose();
  const std::size_t pixels = static_cast<std::size_t>(intr_.width) * intr_.height;
  Image img(pixels * 3, 0.0);
  if (coverage) coverage->assign(pixels, 0.0);
  if (ids) ids->assign(pixels, -1);
  const int ss = supersample_;
  const double inv = 1.0 / (ss * ss);
  std::vector<int> votes(spec_.objects.size());
  for (int y = 0; y < intr_.height; ++y) {
    for (int x = 0; x < intr_.width; ++x) {
      Vector3d acc = Vector3d::Zero();
      double cov = 0;
      std::fill(votes.begin(), votes.end(), 0);
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double px = x + (sx + 0.5) / ss, py = y + (sy + 0.5) / ss;
          const Vector3d dir = cam_to_world * Vector3d((px - pose.cx) / pose.fx, (py - pose.cy) / pose.fy, 1.0);
          double best = kInf;
          const Solid* hit = nullptr;
          Vector3d hit_local;
          for (const auto& s : solids) {
            Vector3d local;
            const double t = intersect(spec_.objects[s.object], s.center, pose.position, dir, local);
            if (t < best) {
              best = t;
              hit = &s;
              hit_local = local;
            }
          }
          if (!hit) {
            acc += background;
            continue;
          }
          const auto& obj = spec_.objects[hit->object];
          const Vector3d world_offset = pose.position + best * dir - hit->center;
          Vector3d horiz(world_offset.x(), world_offset.y(), 0.0);
          bool marker = false;
          if (horiz.norm() > 1e-12 && std::abs(hit_local.z()) < kMarkerHalfHeight) {
            const double cosang = horiz.normalized().dot(horizontal_unit(hit->marker_azimuth_deg));
            marker = cosang > std::cos(kMarkerHalfAngle * std::numbers::pi / 180.0);
          }
          acc += marker ? Vector3d(Vector3d::Ones() - obj.color_hint) : obj.color_hint;
          cov += 1;
          ++votes[hit->object];
        }
      }
      const std::size_t p = static_cast<std::size_t>(y) * intr_.width + x;
      for (int k = 0; k < 3; ++k) img[p * 3 + k] = acc[k] * inv;
      if (coverage) (*coverage)[p] = cov * inv;
      if (ids && cov > 0) (*ids)[p] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
  }
  return img;
}

Image TargetField::object_target(std::size_t object, const ViewSample& view, const Vector3d& background) const {
  return cast({object_solid(object)}, view, background, nullptr, nullptr);
}

Image TargetField::edge_target(std::size_t edge, const ViewSample& view, const Vector3d& background) const {
  const auto& e = spec_.edges.at(edge);
  std::vector<Solid> solids;
  for (const auto& id : {e.src, e.dst}) {
    const std::size_t i = spec_.object_index(id);
    solids.push_back({i, spec_.objects[i].center, spec_.objects[i].azimuth_offset_deg});
  }
  return cast(solids, view, background, nullptr, nullptr);
}

Image TargetField::scene_target(const ViewSample& view, const Vector3d& background) const {
  std::vector<Solid> solids;
  for (std::size_t i = 0; i < spec_.objects.size(); ++i)
    solids.push_back({i, spec_.objects[i].center, spec_.objects[i].azimuth_offset_deg});
  return cast(solids, view, background, nullptr, nullptr);
}

Image TargetField::target(const GuidancePrompt& prompt, const ViewSample& view, const Vector3d& background) const {
  switch (prompt.kind) {
    case PromptKind::Object: return object_target(prompt.subject, view, background);
    case PromptKind::Edge: return edge_target(prompt.subject, view, background);
    case PromptKind::Scene: return scene_target(view, background);
  }
  throw std::invalid_argument("unknown prompt kind");
}

std::vector<double> TargetField::object_coverage(std::size_t object, const ViewSample& view) const {
  std::vector<double> cov;
  cast({object_solid(object)}, view, Vector3d::Zero(), &cov, nullptr);
  return cov;
}

std::vector<int> TargetField::visible_object_map(const std::vector<std::size_t>& objects, const ViewSample& view) const {
  std::vector<Solid> solids;
  for (std::size_t i : objects) solids.push_back({i, spec_.objects.at(i).center, spec_.objects[i].azimuth_offset_deg});
  std::vector<int> ids;
  cast(solids, view, Vector3d::Zero(), nullptr, &ids);
  return ids;
}

double silhouette_iou(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("coverage maps differ in size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] > 0.5, y = b[i] > 0.5;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace stagesplat
