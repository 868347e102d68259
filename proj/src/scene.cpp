#include "stagesplat/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stagesplat/error.hpp"
#include "stagesplat/rng.hpp"

namespace stagesplat {

using nlohmann::json;

std::string_view to_string(Primitive p) {
  switch (p) {
    case Primitive::Sphere: return "sphere";
    case Primitive::Box: return "box";
    case Primitive::Ellipsoid: return "ellipsoid";
    case Primitive::Cylinder: return "cylinder";
  }
  return "sphere";
}

Primitive primitive_from_string(std::string_view s) {
  if (s == "sphere") return Primitive::Sphere;
  if (s == "box") return Primitive::Box;
  if (s == "ellipsoid") return Primitive::Ellipsoid;
  if (s == "cylinder") return Primitive::Cylinder;
  throw ValidationError("unknown primitive '" + std::string(s) + "'");
}

std::optional<std::size_t> SceneSpec::find_object(std::string_view id) const {
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (objects[i].id == id) return i;
  return std::nullopt;
}

std::size_t SceneSpec::object_index(std::string_view id) const {
  if (auto i = find_object(id)) return *i;
  throw ValidationError("unknown object id '" + std::string(id) + "'");
}

std::string SceneSpec::edge_id(std::size_t e) const { return edges.at(e).src + "-" + edges.at(e).dst; }

namespace {

Vec3 read_vec3(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw ParseError(std::string("'") + key + "' must be an array of 3 numbers");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

ObjectSpec read_object(const json& j) {
  if (!j.is_object()) throw ParseError("object entry must be a JSON object");
  ObjectSpec o;
  o.id = j.at("id").get<std::string>();
  o.prompt = j.at("prompt").get<std::string>();
  o.primitive = primitive_from_string(j.at("primitive").get<std::string>());
  o.center = read_vec3(j, "center");
  o.size = j.at("size").get<double>();
  o.orientation_deg = j.value("orientation_deg", 0.0);
  o.azimuth_offset_deg = j.value("azimuth_offset_deg", 0.0);
  if (j.contains("color_hint")) o.color_hint = read_vec3(j, "color_hint");
  if (j.contains("negatives")) o.negatives = j.at("negatives").get<std::vector<std::string>>();
  return o;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

SceneSpec parse_scene_spec(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene spec is not valid JSON: ") + e.what());
  }
  SceneSpec spec;
  try {
    if (!doc.is_object()) throw ParseError("scene spec must be a JSON object");
    spec.global_prompt = doc.at("global_prompt").get<std::string>();
    const auto& objs = doc.at("objects");
    if (!objs.is_array()) throw ParseError("'objects' must be an array");
    for (const auto& o : objs) spec.objects.push_back(read_object(o));
    if (doc.contains("edges")) {
      const auto& edges = doc.at("edges");
      if (!edges.is_array()) throw ParseError("'edges' must be an array");
      for (const auto& e : edges)
        spec.edges.push_back({e.at("src").get<std::string>(), e.at("dst").get<std::string>(),
                              e.at("prompt").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene spec schema error: ") + e.what());
  }
  validate(spec);
  return spec;
}

SceneSpec load_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_spec(ss.str());
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  json doc;
  doc["global_prompt"] = spec.global_prompt;
  doc["objects"] = json::array();
  for (const auto& o : spec.objects) {
    doc["objects"].push_back({{"id", o.id},
                              {"prompt", o.prompt},
                              {"primitive", std::string(to_string(o.primitive))},
                              {"center", vec_json(o.center)},
                              {"size", o.size},
                              {"orientation_deg", o.orientation_deg},
                              {"azimuth_offset_deg", o.azimuth_offset_deg},
                              {"color_hint", vec_json(o.color_hint)},
                              {"negatives", o.negatives}});
  }
  doc["edges"] = json::array();
  for (const auto& e : spec.edges) doc["edges"].push_back({{"src", e.src}, {"dst", e.dst}, {"prompt", e.prompt}});
  return doc.dump(2);
}

void validate(const SceneSpec& spec) {
  if (spec.objects.empty()) throw ValidationError("scene must contain at least one object");
  std::set<std::string> ids;
  for (const auto& o : spec.objects) {
    if (o.id.empty()) throw ValidationError("object id must be non-empty");
    if (!ids.insert(o.id).second) throw ValidationError("duplicate object id '" + o.id + "'");
    if (!(o.size > 0.0) || !std::isfinite(o.size))
      throw ValidationError("object '" + o.id + "' must have size > 0");
    for (int c = 0; c < 3; ++c) {
      if (!(o.color_hint[c] >= 0.0 && o.color_hint[c] <= 1.0))
        throw ValidationError("object '" + o.id + "' color_hint must lie in [0,1]");
      if (!std::isfinite(o.center[c])) throw ValidationError("object '" + o.id + "' center must be finite");
    }
    if (!(o.azimuth_offset_deg >= -180.0 && o.azimuth_offset_deg <= 180.0))
      throw ValidationError("object '" + o.id + "' azimuth_offset_deg must lie in [-180,180]");
    if (!std::isfinite(o.orientation_deg))
      throw ValidationError("object '" + o.id + "' orientation_deg must be finite");
  }
  for (const auto& e : spec.edges) {
    if (!ids.count(e.src)) throw ValidationError("edge references unknown object '" + e.src + "'");
    if (!ids.count(e.dst)) throw ValidationError("edge references unknown object '" + e.dst + "'");
    if (e.src == e.dst) throw ValidationError("edge connects object '" + e.src + "' to itself");
  }
  for (const auto& o : spec.objects) {
    for (const auto& n : o.negatives) {
      const bool adjacent = std::any_of(spec.edges.begin(), spec.edges.end(), [&](const EdgeSpec& e) {
        return (e.src == o.id && e.dst == n) || (e.dst == o.id && e.src == n);
      });
      if (!adjacent)
        throw ValidationError("negative '" + n + "' of object '" + o.id + "' is not a directly connected object");
    }
  }
}

std::vector<std::string> placement_warnings(const SceneSpec& spec) {
  std::vector<std::string> out;
  for (const auto& o : spec.objects) {
    if (o.center.cwiseAbs().maxCoeff() > 10.0)
      out.push_back("object '" + o.id + "' center lies outside the [-10,10]^3 world box");
  }
  return out;
}

Vec3 ellipsoid_semi_axes() { return {1.0, 0.6, 0.8}; }

double bounding_radius(const ObjectSpec& obj) {
  switch (obj.primitive) {
    case Primitive::Sphere:
    case Primitive::Ellipsoid: return obj.size;
    case Primitive::Box: return obj.size * std::sqrt(3.0);
    case Primitive::Cylinder: return obj.size * std::sqrt(2.0);
  }
  return obj.size;
}

std::optional<std::size_t> GaussianCloud::find_object(std::string_view id) const {
  for (std::size_t i = 0; i < partitions.size(); ++i)
    if (partitions[i].id == id) return i;
  return std::nullopt;
}

std::size_t GaussianCloud::object_of(std::size_t gaussian) const {
  for (std::size_t i = 0; i < partitions.size(); ++i)
    if (gaussian >= partitions[i].begin && gaussian < partitions[i].end) return i;
  throw std::out_of_range("gaussian index outside every partition");
}

std::vector<std::size_t> GaussianCloud::indices_of(std::span<const std::size_t> objects) const {
  std::vector<std::size_t> sorted(objects.begin(), objects.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> out;
  for (std::size_t o : sorted) {
    const auto& p = partitions.at(o);
    for (std::size_t i = p.begin; i < p.end; ++i) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> GaussianCloud::all_objects() const {
  std::vector<std::size_t> out(partitions.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

void GaussianCloud::check_invariants() const {
  const std::size_t n = means.size();
  if (log_scales.size() != n || rotations.size() != n || opacity_logits.size() != n || colors.size() != n)
    throw std::logic_error("gaussian parameter arrays have mismatched lengths");
  if (translations.size() != partitions.size())
    throw std::logic_error("translation count does not match partition count");
  std::size_t cursor = 0;
  for (const auto& p : partitions) {
    if (p.begin != cursor || p.end < p.begin) throw std::logic_error("partition '" + p.id + "' is not contiguous");
    cursor = p.end;
  }
  if (cursor != n) throw std::logic_error("partitions do not cover all gaussians");
}

GaussianCloud GaussianCloud::subset(std::size_t object) const {
  const auto& p = partitions.at(object);
  GaussianCloud out;
  auto slice = [&](const auto& v) { return std::decay_t<decltype(v)>(v.begin() + p.begin, v.begin() + p.end); };
  out.means = slice(means);
  out.log_scales = slice(log_scales);
  out.rotations = slice(rotations);
  out.opacity_logits = slice(opacity_logits);
  out.colors = slice(colors);
  out.partitions = {{p.id, 0, p.size()}};
  out.translations = {translations.at(object)};
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

double initial_sigma(double size, std::size_t n_points) {
  return size * std::pow(static_cast<double>(n_points), -1.0 / 3.0) * 0.5;
}

Eigen::Matrix3d rotation_about_z(double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Vec3 sample_unit_primitive(Primitive p, std::uint64_t seed, std::uint64_t object_index, std::uint64_t point_index) {
  const std::uint64_t stream = mix64(object_index + 1);
  const double u = counter_uniform(seed, stream, point_index * 4 + 0);
  const double v = counter_uniform(seed, stream, point_index * 4 + 1);
  const double w = counter_uniform(seed, stream, point_index * 4 + 2);
  switch (p) {
    case Primitive::Box: return {2 * u - 1, 2 * v - 1, 2 * w - 1};
    case Primitive::Cylinder: {
      const double r = std::sqrt(u), a = 2 * std::numbers::pi * v;
      return {r * std::cos(a), r * std::sin(a), 2 * w - 1};
    }
    case Primitive::Sphere:
    case Primitive::Ellipsoid: {
      const double z = 2 * u - 1, a = 2 * std::numbers::pi * v;
      const double r = std::cbrt(w), ring = std::sqrt(std::max(0.0, 1 - z * z));
      Vec3 q(r * ring * std::cos(a), r * ring * std::sin(a), r * z);
      if (p == Primitive::Ellipsoid) q = q.cwiseProduct(ellipsoid_semi_axes());
      return q;
    }
  }
  return Vec3::Zero();
}

GaussianCloud init_object_cloud(const ObjectSpec& obj, std::size_t n_points, std::uint64_t seed,
                                std::uint64_t object_index) {
  if (n_points < 1) throw ValidationError("n_points must be at least 1");
  GaussianCloud c;
  const Eigen::Matrix3d rot = rotation_about_z(obj.orientation_deg);
  const double log_sigma = std::log(initial_sigma(obj.size, n_points));
  const double opacity = logit(0.1);
  const std::uint64_t color_stream = mix64(object_index + 1) ^ 0xc0105ULL;
  c.means.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const Vec3 p = sample_unit_primitive(obj.primitive, seed, object_index, i);
    c.means.push_back(obj.size * (rot * p) + obj.center);
    c.log_scales.push_back(Vec3::Constant(log_sigma));
    c.rotations.push_back(Quat4(1, 0, 0, 0));
    c.opacity_logits.push_back(opacity);
    Vec3 col;
    for (int k = 0; k < 3; ++k) {
      const double jitter = (counter_uniform(seed, color_stream, i * 3 + k) * 2 - 1) * 0.05;
      col[k] = logit(std::clamp(obj.color_hint[k] + jitter, 0.02, 0.98));
    }
    c.colors.push_back(col);
  }
  c.partitions = {{obj.id, 0, n_points}};
  c.translations = {Vec3::Zero()};
  return c;
}

GaussianCloud assemble_scene(const SceneSpec& spec, std::size_t n_points_per_object, std::uint64_t seed) {
  GaussianCloud scene;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    GaussianCloud part = init_object_cloud(spec.objects[i], n_points_per_object, seed, i);
    const std::size_t begin = scene.size();
    auto append = [](auto& dst, const auto& src) { dst.insert(dst.end(), src.begin(), src.end()); };
    append(scene.means, part.means);
    append(scene.log_scales, part.log_scales);
    append(scene.rotations, part.rotations);
    append(scene.opacity_logits, part.opacity_logits);
    append(scene.colors, part.colors);
    scene.partitions.push_back({spec.objects[i].id, begin, scene.size()});
    scene.translations.push_back(Vec3::Zero());
  }
  return scene;
}

std::vector<Vec3> effective_means(const GaussianCloud& cloud) {
  std::vector<Vec3> out = cloud.means;
  for (std::size_t o = 0; o < cloud.partitions.size(); ++o) {
    const auto& p = cloud.partitions[o];
    for (std::size_t i = p.begin; i < p.end; ++i) out[i] += cloud.translations[o];
  }
  return out;
}

}  // namespace stagesplat
