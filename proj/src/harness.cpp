#include "stagesplat/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "stagesplat/error.hpp"
#include "stagesplat/image_io.hpp"

namespace stagesplat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.3.0";

json config_to_json(const RunConfig& c) {
  const OptimizerConfig& o = c.optimizer;
  const CurriculumConfig& cc = o.curriculum;
  const DensifyConfig& d = cc.densify;
  const LearningRates& lr = o.learning_rates;
  json j;
  j["spec"] = c.scene ? "" : c.spec_path;
  if (c.scene) j["scene"] = json::parse(scene_spec_to_json(*c.scene));
  j["out"] = c.out_dir;
  j["seed"] = c.seed;
  j["heuristic"] = std::string(to_string(cc.heuristic));
  j["iters"] = cc.total_iters;
  j["iters_per_object"] = cc.iters_per_object;
  j["warmup"] = cc.warmup_iters;
  j["warmup_per_object"] = cc.warmup_per_object;
  j["lambda"] = cc.lambda;
  j["gamma"] = cc.gamma;
  j["stage2_warmup_fraction"] = cc.stage2_warmup_fraction;
  j["translation_iters"] = cc.translation_iters;
  j["translation_phase"] = o.run_translation_phase;
  j["weights"] = {{"object", cc.w_object}, {"edge", cc.w_edge}, {"scene", cc.w_scene}};
  j["conflict_delta"] = o.conflict_delta;
  j["resolution"] = o.intrinsics.width;
  j["points_per_object"] = o.points_per_object;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["camera"] = {{"fov_y_deg", o.intrinsics.fov_y_deg},     {"near", o.intrinsics.near},
                 {"far", o.intrinsics.far},                 {"azimuth_min", o.sampling.azimuth_min},
                 {"azimuth_max", o.sampling.azimuth_max},   {"elevation_min", o.sampling.elevation_min},
                 {"elevation_max", o.sampling.elevation_max}, {"radius_min", o.sampling.radius_min},
                 {"radius_max", o.sampling.radius_max},     {"edge_view_on_pair", o.edge_view_on_pair}};
  j["background"] = {o.background_min, o.background_max};
  j["guidance"] = {{"negative_weight", o.guidance.negative_weight}, {"gain", o.guidance.gain}};
  j["learning_rates"] = {{"mean_init", lr.mean_init}, {"mean_final", lr.mean_final},
                         {"mean_extent_scale", lr.mean_extent_scale}, {"color", lr.color},
                         {"opacity", lr.opacity}, {"scale", lr.scale},
                         {"rotation", lr.rotation}, {"translation", lr.translation}};
  j["densify"] = {{"enabled", d.enabled},
                  {"start_iter", d.start_iter},
                  {"end_iter", d.end_iter},
                  {"interval", d.interval},
                  {"grad_threshold", d.grad_threshold},
                  {"opacity_prune_threshold", d.opacity_prune_threshold},
                  {"max_gaussians", d.max_gaussians},
                  {"split_scale_fraction", d.split_scale_fraction},
                  {"split_shrink", d.split_shrink}};
  j["raster"] = {{"cutoff_sigma", o.raster.cutoff_sigma},
                 {"early_termination", o.raster.early_termination},
                 {"tile_size", o.raster.tile_size}};
  j["eval_view"] = {{"azimuth", c.eval_azimuth}, {"elevation", c.eval_elevation}};
  json hs = json::array();
  for (Heuristic h : c.heuristics) hs.push_back(std::string(to_string(h)));
  j["heuristics"] = hs;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  OptimizerConfig& o = c.optimizer;
  CurriculumConfig& cc = o.curriculum;
  DensifyConfig& d = cc.densify;
  LearningRates& lr = o.learning_rates;
  c.spec_path = j.at("spec").get<std::string>();
  if (j.contains("scene")) c.scene = parse_scene_spec(j.at("scene").dump());
  c.out_dir = j.at("out").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  cc.heuristic = heuristic_from_string(j.at("heuristic").get<std::string>());
  cc.total_iters = j.at("iters").get<long>();
  cc.iters_per_object = j.at("iters_per_object").get<long>();
  cc.warmup_iters = j.at("warmup").get<long>();
  cc.warmup_per_object = j.at("warmup_per_object").get<long>();
  cc.lambda = j.at("lambda").get<double>();
  cc.gamma = j.at("gamma").get<double>();
  cc.stage2_warmup_fraction = j.at("stage2_warmup_fraction").get<double>();
  cc.translation_iters = j.at("translation_iters").get<long>();
  o.run_translation_phase = j.at("translation_phase").get<bool>();
  const json& w = j.at("weights");
  cc.w_object = w.at("object").get<double>();
  cc.w_edge = w.at("edge").get<double>();
  cc.w_scene = w.at("scene").get<double>();
  o.conflict_delta = j.at("conflict_delta").get<double>();
  o.intrinsics.width = o.intrinsics.height = j.at("resolution").get<int>();
  o.points_per_object = j.at("points_per_object").get<std::size_t>();
  c.checkpoint_interval = j.at("checkpoint_interval").get<long>();
  const json& cam = j.at("camera");
  o.intrinsics.fov_y_deg = cam.at("fov_y_deg").get<double>();
  o.intrinsics.near = cam.at("near").get<double>();
  o.intrinsics.far = cam.at("far").get<double>();
  o.sampling.azimuth_min = cam.at("azimuth_min").get<double>();
  o.sampling.azimuth_max = cam.at("azimuth_max").get<double>();
  o.sampling.elevation_min = cam.at("elevation_min").get<double>();
  o.sampling.elevation_max = cam.at("elevation_max").get<double>();
  o.sampling.radius_min = cam.at("radius_min").get<double>();
  o.sampling.radius_max = cam.at("radius_max").get<double>();
  o.edge_view_on_pair = cam.at("edge_view_on_pair").get<bool>();
  const json& bg = j.at("background");
  if (!bg.is_array() || bg.size() != 2) throw ValidationError("background must be a [min, max] pair");
  o.background_min = bg[0].get<double>();
  o.background_max = bg[1].get<double>();
  const json& g = j.at("guidance");
  o.guidance.negative_weight = g.at("negative_weight").get<double>();
  o.guidance.gain = g.at("gain").get<double>();
  const json& l = j.at("learning_rates");
  lr.mean_init = l.at("mean_init").get<double>();
  lr.mean_final = l.at("mean_final").get<double>();
  lr.mean_extent_scale = l.at("mean_extent_scale").get<double>();
  lr.color = l.at("color").get<double>();
  lr.opacity = l.at("opacity").get<double>();
  lr.scale = l.at("scale").get<double>();
  lr.rotation = l.at("rotation").get<double>();
  lr.translation = l.at("translation").get<double>();
  const json& dj = j.at("densify");
  d.enabled = dj.at("enabled").get<bool>();
  d.start_iter = dj.at("start_iter").get<long>();
  d.end_iter = dj.at("end_iter").get<long>();
  d.interval = dj.at("interval").get<long>();
  d.grad_threshold = dj.at("grad_threshold").get<double>();
  d.opacity_prune_threshold = dj.at("opacity_prune_threshold").get<double>();
  d.max_gaussians = dj.at("max_gaussians").get<std::size_t>();
  d.split_scale_fraction = dj.at("split_scale_fraction").get<double>();
  d.split_shrink = dj.at("split_shrink").get<double>();
  const json& r = j.at("raster");
  o.raster.cutoff_sigma = r.at("cutoff_sigma").get<double>();
  o.raster.early_termination = r.at("early_termination").get<bool>();
  o.raster.tile_size = r.at("tile_size").get<int>();
  const json& ev = j.at("eval_view");
  c.eval_azimuth = ev.at("azimuth").get<double>();
  c.eval_elevation = ev.at("elevation").get<double>();
  for (const auto& h : j.at("heuristics")) c.heuristics.push_back(heuristic_from_string(h.get<std::string>()));
  if (c.checkpoint_interval < 0) throw ValidationError("checkpoint_interval must be non-negative");
  if (o.raster.tile_size < 1) throw ValidationError("tile_size must be positive");
  o.validate();
  return c;
}

bool compatible(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return false;
}

// Overlays `in` on `base`, rejecting unknown keys and mistyped values.
void merge_checked(json& base, const json& in, const std::string& prefix) {
  for (auto it = in.begin(); it != in.end(); ++it) {
    const std::string key = prefix + it.key();
    if (prefix.empty() && it.key() == "build") continue;
    if (prefix.empty() && it.key() == "scene") {
      if (!it.value().is_object()) throw ValidationError("'scene' must be an object");
      base["scene"] = it.value();
      continue;
    }
    if (!base.contains(it.key())) throw ValidationError("unknown config key '" + key + "'");
    json& def = base[it.key()];
    if (!compatible(def, it.value())) throw ValidationError("config key '" + key + "' has the wrong type");
    if (def.is_object())
      merge_checked(def, it.value(), key + ".");
    else
      def = it.value();
  }
}

RunConfig from_checked(const json& j) {
  try {
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid config: ") + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write '" + p.string() + "'");
  f << text;
  if (!f) throw IoError("write failed for '" + p.string() + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError("cannot create output directory '" + p.string() + "'");
}

}  // namespace

const char* library_version() { return kVersion; }

RunConfig parse_run_config(std::string_view json_text, const std::string& base_dir) {
  json in;
  try {
    in = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!in.is_object()) throw ValidationError("config must be a JSON object");
  json base = config_to_json(RunConfig{});
  merge_checked(base, in, "");
  if (in.contains("scene")) base["spec"] = "";
  RunConfig c = from_checked(base);
  if (!c.scene && !c.spec_path.empty() && !base_dir.empty() && fs::path(c.spec_path).is_relative())
    c.spec_path = (fs::path(base_dir) / c.spec_path).lexically_normal().string();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text(path), fs::path(path).parent_path().string());
}

void apply_override(RunConfig& config, std::string_view key, std::string_view json_value) {
  json value;
  try {
    value = json::parse(json_value);
  } catch (const json::parse_error&) {
    value = std::string(json_value);  // bare strings
  }
  json nested = value;
  std::vector<std::string> parts;
  std::string k(key);
  for (std::size_t pos; (pos = k.find('.')) != std::string::npos;) {
    parts.push_back(k.substr(0, pos));
    k.erase(0, pos + 1);
  }
  parts.push_back(k);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) nested = json{{*it, nested}};
  json base = config_to_json(config);
  merge_checked(base, nested, "");
  if (parts.front() == "spec") base.erase("scene");
  config = from_checked(base);
}

std::string run_config_to_json(const RunConfig& config, bool pretty) {
  return config_to_json(config).dump(pretty ? 2 : -1);
}

SceneSpec resolve_scene(const RunConfig& config) {
  if (config.scene) {
    validate(*config.scene);
    return *config.scene;
  }
  if (config.spec_path.empty()) throw ValidationError("no scene: set 'spec' or an inline 'scene'");
  return load_scene_spec(config.spec_path);
}

ValidateReport cmd_validate(const std::string& spec_path) {
  const SceneSpec spec = load_scene_spec(spec_path);
  return {spec.objects.size(), spec.edges.size(), placement_warnings(spec)};
}

void render_png(const GaussianCloud& cloud, std::span<const std::size_t> objects, const ViewSample& view,
                const CameraIntrinsics& intr, double background, const std::string& path) {
  const RenderOutput r = render(cloud, objects, view, intr, Eigen::Vector3d::Constant(background), RasterSettings{});
  write_png(path, r.image, intr.width, intr.height);
}

RunArtifacts cmd_run(const RunConfig& config, const LogFn& log) {
  SceneSpec spec = resolve_scene(config);
  const fs::path dir(config.out_dir);
  ensure_dir(dir);

  RunConfig resolved = config;
  resolved.scene = spec;
  resolved.out_dir = dir.string();
  json manifest = config_to_json(resolved);
  manifest["build"] = {{"version", kVersion}, {"compiler", __VERSION__}, {"cxx_standard", __cplusplus}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  Optimizer opt(spec, config.optimizer, config.seed);
  const CameraIntrinsics& intr = config.optimizer.intrinsics;
  ViewSample eval;
  eval.azimuth = config.eval_azimuth;
  eval.elevation = config.eval_elevation;
  eval.look_at = opt.targets().scene_anchor();
  eval.radius = fit_distance(opt.targets().scene_extent(), intr);
  const double eval_bg = 1.0;

  long last_render = -1;
  opt.set_checkpoint(config.checkpoint_interval, [&](long iter, const Optimizer& o) {
    const long done = iter + 1;
    render_png(o.cloud(), o.cloud().all_objects(), eval, intr, eval_bg,
               (dir / ("render_" + std::to_string(done) + ".png")).string());
    last_render = done;
    const std::string stem = "ckpt_" + std::to_string(done);
    export_ply(o.cloud(), std::nullopt, (dir / (stem + ".ply")).string());
    json tr = json::object();
    for (std::size_t k = 0; k < o.cloud().partitions.size(); ++k) {
      const Vec3& t = o.cloud().translations[k];
      tr[o.cloud().partitions[k].id] = {t.x(), t.y(), t.z()};
    }
    write_text(dir / (stem + "_translations.json"), json{{"iter", done}, {"translations", tr}}.dump(2) + "\n");
    if (log) log("iter " + std::to_string(done) + "/" + std::to_string(o.total_iters()));
  });
  opt.run();

  const long total = opt.total_iters();
  write_trace_csv(opt.trace(), (dir / "trace.csv").string());
  export_ply(opt.cloud(), std::nullopt, (dir / "final.ply").string());
  for (const auto& p : opt.cloud().partitions) export_ply(opt.cloud(), p.id, (dir / ("obj_" + p.id + ".ply")).string());
  if (last_render != total)
    render_png(opt.cloud(), opt.cloud().all_objects(), eval, intr, eval_bg,
               (dir / ("render_" + std::to_string(total) + ".png")).string());
  if (log)
    log("run " + std::string(to_string(config.optimizer.curriculum.heuristic)) + ": " + std::to_string(total) +
        " iterations, " + std::to_string(opt.cloud().size()) + " gaussians -> " + dir.string());
  return {dir.string(), opt.cloud(), opt.trace(), total};
}

std::vector<TraceSummary> cmd_compare(const RunConfig& config, std::span<const Heuristic> heuristics, const LogFn& log) {
  if (heuristics.size() < 2) throw ValidationError("compare needs at least two heuristics");
  const fs::path dir(config.out_dir);
  ensure_dir(dir);
  std::vector<TraceSummary> rows;
  std::map<std::string, int> seen;
  std::string merged = "heuristic,iter,stage,kind,subject,value\n";
  for (Heuristic h : heuristics) {
    std::string label(to_string(h));
    if (const int n = ++seen[label]; n > 1) label += "_" + std::to_string(n);
    RunConfig c = config;
    c.optimizer.curriculum.heuristic = h;
    c.out_dir = (dir / label).string();
    const RunArtifacts a = cmd_run(c, log);
    const std::string csv = trace_to_csv(a.trace);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) merged += label + "," + line + "\n";
    rows.push_back(summarize(a.trace, a.total_iters, label));
  }
  write_text(dir / "compare.csv", merged);
  write_text(dir / "summary.csv", summary_table_csv(rows));
  return rows;
}

std::vector<std::string> cmd_render(const RenderRequest& req) {
  fs::path input(req.input);
  if (fs::is_directory(input)) input /= "final.ply";
  if (!fs::exists(input)) throw IoError("no such artifact: '" + input.string() + "'");
  const GaussianCloud cloud = import_ply(input.string());

  std::vector<std::size_t> objects;
  if (req.object) {
    const auto idx = cloud.find_object(*req.object);
    if (!idx) throw ValidationError("object '" + *req.object + "' not in " + input.string());
    objects.push_back(*idx);
  } else {
    objects = cloud.all_objects();
  }

  CameraIntrinsics intr;
  intr.width = req.width;
  intr.height = req.height;
  intr.fov_y_deg = req.fov_y_deg;
  intr.validate();

  const auto means = effective_means(cloud);
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  std::size_t n = 0;
  for (std::size_t o : objects)
    for (std::size_t i = cloud.partitions[o].begin; i < cloud.partitions[o].end; ++i, ++n) center += means[i];
  if (n > 0) center /= static_cast<double>(n);
  double extent = 0;
  for (std::size_t o : objects)
    for (std::size_t i = cloud.partitions[o].begin; i < cloud.partitions[o].end; ++i)
      extent = std::max(extent, (means[i] - center).norm());

  ViewSample view;
  view.look_at = center;
  view.elevation = req.elevation;
  view.radius = req.radius > 0 ? req.radius : fit_distance(std::max(extent, 1e-3), intr);

  std::vector<std::string> written;
  if (req.turntable) {
    const fs::path out(req.output);
    ensure_dir(out);
    for (int k = 0; k < 36; ++k) {
      view.azimuth = wrap_degrees(req.azimuth + 10.0 * k);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%03d.png", k);
      written.push_back((out / name).string());
      render_png(cloud, objects, view, intr, req.background, written.back());
    }
  } else {
    view.azimuth = wrap_degrees(req.azimuth);
    if (const auto parent = fs::path(req.output).parent_path(); !parent.empty()) ensure_dir(parent);
    render_png(cloud, objects, view, intr, req.background, req.output);
    written.push_back(req.output);
  }
  return written;
}

}  // namespace stagesplat
