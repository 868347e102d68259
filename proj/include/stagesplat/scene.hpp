#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace stagesplat {

using Vec3 = Eigen::Vector3d;
using Quat4 = Eigen::Vector4d;  // (w, x, y, z)

enum class Primitive { Sphere, Box, Ellipsoid, Cylinder };

std::string_view to_string(Primitive p);
Primitive primitive_from_string(std::string_view s);

struct ObjectSpec {
  std::string id;
  std::string prompt;
  Primitive primitive = Primitive::Sphere;
  Vec3 center = Vec3::Zero();
  double size = 1.0;
  double orientation_deg = 0.0;
  double azimuth_offset_deg = 0.0;
  Vec3 color_hint = Vec3::Constant(0.5);
  std::vector<std::string> negatives;
};

struct EdgeSpec {
  std::string src;
  std::string dst;
  std::string prompt;
};

/// Decomposed scene description: objects, pairwise relations and the
/// global prompt. Objects keep file order; that order defines partition
/// layout and edge round-robin order.
struct SceneSpec {
  std::string global_prompt;
  std::vector<ObjectSpec> objects;
  std::vector<EdgeSpec> edges;

  std::optional<std::size_t> find_object(std::string_view id) const;
  std::size_t object_index(std::string_view id) const;  // throws ValidationError
  std::string edge_id(std::size_t e) const;              // "src-dst"
};

/// Parses and validates a scene-spec JSON document. Throws ParseError or
/// ValidationError.
SceneSpec parse_scene_spec(std::string_view json_text);
SceneSpec load_scene_spec(const std::string& path);
std::string scene_spec_to_json(const SceneSpec& spec);

/// Hard invariants; throws ValidationError.
void validate(const SceneSpec& spec);
/// Soft findings (objects outside the [-10,10]^3 world box).
std::vector<std::string> placement_warnings(const SceneSpec& spec);

/// Semi-axes of the unit ellipsoid primitive.
Vec3 ellipsoid_semi_axes();

/// Radius of a sphere around the object center that encloses the primitive.
double bounding_radius(const ObjectSpec& obj);

struct ObjectPartition {
  std::string id;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// Structure-of-arrays Gaussian parameters plus the object partition map.
/// Partitions are contiguous, ordered, disjoint and cover [0, size()).
struct GaussianCloud {
  std::vector<Vec3> means;
  std::vector<Vec3> log_scales;
  std::vector<Quat4> rotations;
  std::vector<double> opacity_logits;
  std::vector<Vec3> colors;  // pre-sigmoid RGB
  std::vector<ObjectPartition> partitions;
  std::vector<Vec3> translations;  // one per partition

  std::size_t size() const { return means.size(); }
  std::size_t object_count() const { return partitions.size(); }
  std::optional<std::size_t> find_object(std::string_view id) const;
  std::size_t object_of(std::size_t gaussian) const;
  /// Gaussian indices of the given objects, ascending.
  std::vector<std::size_t> indices_of(std::span<const std::size_t> objects) const;
  std::vector<std::size_t> all_objects() const;

  /// Throws std::logic_error on partition or array-shape violations.
  void check_invariants() const;
  /// Copy of the cloud restricted to one object's Gaussians.
  GaussianCloud subset(std::size_t object) const;
};

double sigmoid(double x);
double logit(double p);

/// Initial per-Gaussian standard deviation for an object.
double initial_sigma(double size, std::size_t n_points);

/// Rotation about +z by the given angle in degrees.
Eigen::Matrix3d rotation_about_z(double degrees);

/// Sample of the unit primitive (before alignment), uniform over its volume.
/// Deterministic in (seed, object_index, point_index).
Vec3 sample_unit_primitive(Primitive p, std::uint64_t seed, std::uint64_t object_index,
                           std::uint64_t point_index);

/// Gaussians for one object: unit-primitive samples aligned by
/// size * R(orientation) * p + center.
GaussianCloud init_object_cloud(const ObjectSpec& obj, std::size_t n_points, std::uint64_t seed,
                                std::uint64_t object_index = 0);

/// Concatenates per-object clouds in spec order; translations start at zero.
GaussianCloud assemble_scene(const SceneSpec& spec, std::size_t n_points_per_object,
                             std::uint64_t seed);

/// Means with each object's translation applied. Pure.
std::vector<Vec3> effective_means(const GaussianCloud& cloud);

/// Binary little-endian PLY. When object_filter is given only that
/// partition is written. Throws IoError / ValidationError.
void export_ply(const GaussianCloud& cloud, std::optional<std::string_view> object_filter,
                const std::string& path);
GaussianCloud import_ply(const std::string& path);

}  // namespace stagesplat
