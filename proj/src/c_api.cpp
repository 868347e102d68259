#include "stagesplat/c_api.h"

#include <exception>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "stagesplat/error.hpp"
#include "stagesplat/harness.hpp"

struct ss_scene {
  stagesplat::SceneSpec spec;
  std::vector<std::string> warnings;
};

struct ss_cloud {
  stagesplat::GaussianCloud cloud;
};

struct ss_config {
  stagesplat::RunConfig config;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class F>
int guarded(F&& f) {
  try {
    f();
    return SS_OK;
  } catch (const stagesplat::ValidationError& e) {
    return fail(SS_ERR_VALIDATION, e.what());
  } catch (const stagesplat::ParseError& e) {
    return fail(SS_ERR_VALIDATION, e.what());
  } catch (const stagesplat::IoError& e) {
    return fail(SS_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SS_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(SS_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(SS_ERR_RUNTIME, "unknown error");
  }
}

stagesplat::LogFn make_log(ss_log_fn log, void* user) {
  if (!log) return {};
  return [log, user](const std::string& m) { log(m.c_str(), user); };
}

}  // namespace

extern "C" {

const char* ss_version(void) { return stagesplat::library_version(); }
const char* ss_last_error(void) { return g_last_error.c_str(); }

int ss_scene_load(const char* path, ss_scene** out) {
  if (!path || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    auto s = std::make_unique<ss_scene>();
    s->spec = stagesplat::load_scene_spec(path);
    s->warnings = stagesplat::placement_warnings(s->spec);
    *out = s.release();
  });
}

int ss_scene_parse(const char* json_text, ss_scene** out) {
  if (!json_text || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    auto s = std::make_unique<ss_scene>();
    s->spec = stagesplat::parse_scene_spec(json_text);
    stagesplat::validate(s->spec);
    s->warnings = stagesplat::placement_warnings(s->spec);
    *out = s.release();
  });
}

void ss_scene_free(ss_scene* scene) { delete scene; }

int ss_scene_object_count(const ss_scene* scene, size_t* out) {
  if (!scene || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  *out = scene->spec.objects.size();
  return SS_OK;
}

int ss_scene_edge_count(const ss_scene* scene, size_t* out) {
  if (!scene || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  *out = scene->spec.edges.size();
  return SS_OK;
}

int ss_scene_warning_count(const ss_scene* scene, size_t* out) {
  if (!scene || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  *out = scene->warnings.size();
  return SS_OK;
}

const char* ss_scene_warning(const ss_scene* scene, size_t index) {
  if (!scene || index >= scene->warnings.size()) return nullptr;
  return scene->warnings[index].c_str();
}

int ss_cloud_assemble(const ss_scene* scene, size_t points_per_object, uint64_t seed, ss_cloud** out) {
  if (!scene || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  if (points_per_object == 0) return fail(SS_ERR_ARGUMENT, "points_per_object must be positive");
  return guarded([&] { *out = new ss_cloud{stagesplat::assemble_scene(scene->spec, points_per_object, seed)}; });
}

int ss_cloud_load_ply(const char* path, ss_cloud** out) {
  if (!path || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new ss_cloud{stagesplat::import_ply(path)}; });
}

int ss_cloud_save_ply(const ss_cloud* cloud, const char* object, const char* path) {
  if (!cloud || !path) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    std::optional<std::string_view> filter;
    if (object) filter = object;
    stagesplat::export_ply(cloud->cloud, filter, path);
  });
}

int ss_cloud_size(const ss_cloud* cloud, size_t* out) {
  if (!cloud || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  *out = cloud->cloud.size();
  return SS_OK;
}

int ss_cloud_object_count(const ss_cloud* cloud, size_t* out) {
  if (!cloud || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  *out = cloud->cloud.object_count();
  return SS_OK;
}

void ss_cloud_free(ss_cloud* cloud) { delete cloud; }

int ss_config_new(ss_config** out) {
  if (!out) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new ss_config{}; });
}

int ss_config_load(const char* path, ss_config** out) {
  if (!path || !out) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] { *out = new ss_config{stagesplat::load_run_config(path), {}}; });
}

int ss_config_set(ss_config* config, const char* key, const char* json_value) {
  if (!config || !key || !json_value) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] { stagesplat::apply_override(config->config, key, json_value); });
}

const char* ss_config_json(ss_config* config) {
  if (!config) return nullptr;
  const int rc = guarded([&] { config->json = stagesplat::run_config_to_json(config->config); });
  return rc == SS_OK ? config->json.c_str() : nullptr;
}

void ss_config_free(ss_config* config) { delete config; }

int ss_run(const ss_config* config, ss_log_fn log, void* user) {
  if (!config) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] { stagesplat::cmd_run(config->config, make_log(log, user)); });
}

int ss_compare(const ss_config* config, const char* heuristics, ss_log_fn log, void* user) {
  if (!config || !heuristics) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    std::vector<stagesplat::Heuristic> hs;
    std::istringstream in(heuristics);
    for (std::string name; std::getline(in, name, ',');)
      if (!name.empty()) hs.push_back(stagesplat::heuristic_from_string(name));
    const auto rows = stagesplat::cmd_compare(config->config, hs, make_log(log, user));
    if (log) log(stagesplat::summary_table_csv(rows).c_str(), user);
  });
}

void ss_render_options_default(ss_render_options* options) {
  if (!options) return;
  const stagesplat::RenderRequest d;
  *options = {d.azimuth, d.elevation, d.radius, d.width, d.height, d.fov_y_deg, d.background, 0, nullptr};
}

int ss_render(const char* input, const char* output, const ss_render_options* options, size_t* frames_written) {
  if (!input || !output || !options) return fail(SS_ERR_ARGUMENT, "null argument");
  return guarded([&] {
    stagesplat::RenderRequest r;
    r.input = input;
    r.output = output;
    if (options->object) r.object = options->object;
    r.azimuth = options->azimuth;
    r.elevation = options->elevation;
    r.radius = options->radius;
    r.width = options->width;
    r.height = options->height;
    r.fov_y_deg = options->fov_y_deg;
    r.background = options->background;
    r.turntable = options->turntable != 0;
    const auto files = stagesplat::cmd_render(r);
    if (frames_written) *frames_written = files.size();
  });
}

}  // extern "C"
