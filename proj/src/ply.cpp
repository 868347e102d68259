#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stagesplat/error.hpp"
#include "stagesplat/scene.hpp"

// PLY layout: 3DGS property names, double precision so parameters survive
// a round trip bit-exactly. Partition layout and per-object translations
// travel in header comments:
//   comment object <count> <tx> <ty> <tz> <id>

namespace stagesplat {

static_assert(std::endian::native == std::endian::little, "PLY writer assumes a little-endian host");

namespace {

constexpr const char* kProps[] = {"x",     "y",     "z",     "scale_0", "scale_1", "scale_2", "rot_0",   "rot_1",
                                  "rot_2", "rot_3", "opacity", "f_dc_0", "f_dc_1", "f_dc_2"};
constexpr std::size_t kPropCount = std::size(kProps);

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void export_ply(const GaussianCloud& cloud, std::optional<std::string_view> object_filter, const std::string& path) {
  cloud.check_invariants();
  std::vector<std::size_t> objects;
  if (object_filter) {
    auto o = cloud.find_object(*object_filter);
    if (!o) throw ValidationError("unknown object id '" + std::string(*object_filter) + "'");
    objects.push_back(*o);
  } else {
    objects = cloud.all_objects();
  }
  std::size_t count = 0;
  for (auto o : objects) count += cloud.partitions[o].size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "ply\nformat binary_little_endian 1.0\n";
  for (auto o : objects) {
    const auto& t = cloud.translations[o];
    out << "comment object " << cloud.partitions[o].size() << ' ' << format_double(t.x()) << ' '
        << format_double(t.y()) << ' ' << format_double(t.z()) << ' ' << cloud.partitions[o].id << '\n';
  }
  out << "element vertex " << count << '\n';
  for (const char* p : kProps) out << "property double " << p << '\n';
  out << "end_header\n";

  std::vector<double> row(kPropCount);
  for (auto o : objects) {
    const auto& part = cloud.partitions[o];
    for (std::size_t i = part.begin; i < part.end; ++i) {
      const auto& m = cloud.means[i];
      const auto& s = cloud.log_scales[i];
      const auto& r = cloud.rotations[i];
      const auto& c = cloud.colors[i];
      row = {m.x(), m.y(), m.z(), s.x(), s.y(), s.z(), r[0], r[1], r[2], r[3], cloud.opacity_logits[i],
             c.x(), c.y(), c.z()};
      out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

GaussianCloud import_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw ParseError("'" + path + "' is not a PLY file");

  struct Prop {
    std::string name;
    bool is_double;
  };
  std::vector<Prop> props;
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  GaussianCloud cloud;
  std::vector<std::size_t> counts;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "binary_little_endian") throw ParseError("only binary_little_endian PLY is supported");
    } else if (kw == "comment") {
      std::string tag;
      ls >> tag;
      if (tag != "object") continue;
      std::size_t n;
      std::string tx, ty, tz;
      ls >> n >> tx >> ty >> tz;
      std::string id;
      std::getline(ls, id);
      if (!id.empty() && id.front() == ' ') id.erase(0, 1);
      counts.push_back(n);
      cloud.partitions.push_back({id, 0, 0});
      cloud.translations.push_back(Vec3(std::strtod(tx.c_str(), nullptr), std::strtod(ty.c_str(), nullptr),
                                        std::strtod(tz.c_str(), nullptr)));
    } else if (kw == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> vertex_count;
      else throw ParseError("unsupported PLY element '" + name + "'");
    } else if (kw == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      if (type == "double" || type == "float64") props.push_back({name, true});
      else if (type == "float" || type == "float32") props.push_back({name, false});
      else throw ParseError("unsupported PLY property type '" + type + "'");
    }
  }
  auto column = [&](const char* name) -> std::ptrdiff_t {
    for (std::size_t k = 0; k < props.size(); ++k)
      if (props[k].name == name) return static_cast<std::ptrdiff_t>(k);
    return -1;
  };
  std::ptrdiff_t cols[kPropCount];
  for (std::size_t k = 0; k < kPropCount; ++k) {
    cols[k] = column(kProps[k]);
    if (cols[k] < 0) throw ParseError(std::string("PLY is missing property '") + kProps[k] + "'");
  }

  std::vector<double> values(props.size());
  for (std::size_t i = 0; i < vertex_count; ++i) {
    for (std::size_t k = 0; k < props.size(); ++k) {
      if (props[k].is_double) {
        in.read(reinterpret_cast<char*>(&values[k]), sizeof(double));
      } else {
        float f;
        in.read(reinterpret_cast<char*>(&f), sizeof(float));
        values[k] = f;
      }
    }
    if (!in) throw ParseError("PLY body is truncated");
    auto v = [&](std::size_t k) { return values[static_cast<std::size_t>(cols[k])]; };
    cloud.means.emplace_back(v(0), v(1), v(2));
    cloud.log_scales.emplace_back(v(3), v(4), v(5));
    cloud.rotations.emplace_back(v(6), v(7), v(8), v(9));
    cloud.opacity_logits.push_back(v(10));
    cloud.colors.emplace_back(v(11), v(12), v(13));
  }

  if (cloud.partitions.empty()) {
    cloud.partitions.push_back({"all", 0, vertex_count});
    cloud.translations.push_back(Vec3::Zero());
  } else {
    std::size_t cursor = 0;
    for (std::size_t o = 0; o < counts.size(); ++o) {
      cloud.partitions[o].begin = cursor;
      cursor += counts[o];
      cloud.partitions[o].end = cursor;
    }
    if (cursor != vertex_count) throw ParseError("PLY object comments do not match the vertex count");
  }
  return cloud;
}

}  // namespace stagesplat
