// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "stagesplat/c_api.h"

namespace {

int exit_code(int status) {
  switch (status) {
    case SS_OK: return 0;
    case SS_ERR_VALIDATION:
    case SS_ERR_ARGUMENT: return 2;
    default: return 1;
  }
}

int report(int status) {
  if (status != SS_OK) std::fprintf(stderr, "error: %s\n", ss_last_error());
  return exit_code(status);
}

void print_line(const char* msg, void*) { std::printf("%s\n", msg); }

struct RunFlags {
  std::string config, spec, out, heuristic;
  std::optional<unsigned long long> seed;
  std::optional<long> iters, checkpoint, points;
  std::optional<double> lambda, gamma, delta;
  std::optional<int> resolution;
  std::vector<std::string> sets;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration; flags override its values");
  cmd->add_option("--spec", f.spec, "Scene spec JSON");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--heuristic", f.heuristic, "holistic|simultaneous|iterative|staged|joint-only|joint-obj");
  cmd->add_option("--iters", f.iters, "Total iterations (default 1500 per object)");
  cmd->add_option("--lambda", f.lambda, "Object-loss ramp weight");
  cmd->add_option("--gamma", f.gamma, "Stage boundary fraction");
  cmd->add_option("--conflict-delta", f.delta, "Object/edge target disagreement");
  cmd->add_option("--resolution", f.resolution, "Square render resolution");
  cmd->add_option("--checkpoint-interval", f.checkpoint, "Iterations between eval renders");
  cmd->add_option("--points", f.points, "Initial Gaussians per object");
  cmd->add_option("--set", f.sets, "Extra override key=json (e.g. camera.fov_y_deg=40)");
}

// Builds the config: file first, then flags.
int build_config(const RunFlags& f, ss_config** out) {
  int rc = f.config.empty() ? ss_config_new(out) : ss_config_load(f.config.c_str(), out);
  if (rc != SS_OK) return rc;
  std::vector<std::pair<std::string, std::string>> kv;
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') q += '\\';
      q += c;
    }
    return q + "\"";
  };
  if (!f.spec.empty()) kv.emplace_back("spec", quote(f.spec));
  if (!f.out.empty()) kv.emplace_back("out", quote(f.out));
  if (!f.heuristic.empty()) kv.emplace_back("heuristic", quote(f.heuristic));
  if (f.seed) kv.emplace_back("seed", std::to_string(*f.seed));
  if (f.iters) kv.emplace_back("iters", std::to_string(*f.iters));
  if (f.checkpoint) kv.emplace_back("checkpoint_interval", std::to_string(*f.checkpoint));
  if (f.points) kv.emplace_back("points_per_object", std::to_string(*f.points));
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  if (f.lambda) kv.emplace_back("lambda", num(*f.lambda));
  if (f.gamma) kv.emplace_back("gamma", num(*f.gamma));
  if (f.delta) kv.emplace_back("conflict_delta", num(*f.delta));
  if (f.resolution) kv.emplace_back("resolution", std::to_string(*f.resolution));
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", s.c_str());
      ss_config_free(*out);
      *out = nullptr;
      return SS_ERR_ARGUMENT;
    }
    kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : kv) {
    if ((rc = ss_config_set(*out, k.c_str(), v.c_str())) != SS_OK) {
      ss_config_free(*out);
      *out = nullptr;
      return rc;
    }
  }
  return SS_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional Gaussian-splat scene optimizer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ss_version()));

  std::string validate_spec;
  auto* validate = app.add_subcommand("validate", "Check a scene spec");
  validate->add_option("path", validate_spec, "Scene spec JSON");
  validate->add_option("--spec", validate_spec, "Scene spec JSON");

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Optimize a scene and write artifacts");
  add_run_flags(run, run_flags);

  RunFlags cmp_flags;
  std::string heuristics = "holistic,simultaneous,iterative,staged";
  auto* compare = app.add_subcommand("compare", "Run several heuristics on the same scene and seed");
  add_run_flags(compare, cmp_flags);
  compare->add_option("--heuristics", heuristics, "Comma-separated heuristic list");

  std::string render_input, render_out = "render.png", render_object;
  int render_res = 256;
  int turntable = 0;
  ss_render_options ropt;
  ss_render_options_default(&ropt);
  auto* render = app.add_subcommand("render", "Render a PLY file or run directory");
  render->add_option("input", render_input, "PLY file or run directory")->required();
  render->add_option("--out", render_out, "PNG path (directory with --turntable)");
  render->add_option("--object", render_object, "Render only this object");
  render->add_option("--azimuth", ropt.azimuth, "Degrees");
  render->add_option("--elevation", ropt.elevation, "Degrees");
  render->add_option("--radius", ropt.radius, "Camera distance; 0 fits the cloud");
  render->add_option("--resolution", render_res, "Square resolution");
  render->add_option("--background", ropt.background, "Gray level in [0,1]");
  render->add_flag("--turntable", turntable, "36 frames at 10 degree steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*validate) {
    if (validate_spec.empty()) {
      std::fprintf(stderr, "error: validate needs a spec path\n");
      return 2;
    }
    ss_scene* scene = nullptr;
    if (const int rc = ss_scene_load(validate_spec.c_str(), &scene); rc != SS_OK) return report(rc);
    size_t objects = 0, edges = 0, warnings = 0;
    ss_scene_object_count(scene, &objects);
    ss_scene_edge_count(scene, &edges);
    ss_scene_warning_count(scene, &warnings);
    std::printf("objects: %zu, edges: %zu\n", objects, edges);
    for (size_t i = 0; i < warnings; ++i) std::printf("warning: %s\n", ss_scene_warning(scene, i));
    ss_scene_free(scene);
    return 0;
  }

  if (*run || *compare) {
    ss_config* cfg = nullptr;
    if (const int rc = build_config(*run ? run_flags : cmp_flags, &cfg); rc != SS_OK) return report(rc);
    const int rc = *run ? ss_run(cfg, print_line, nullptr) : ss_compare(cfg, heuristics.c_str(), print_line, nullptr);
    ss_config_free(cfg);
    return report(rc);
  }

  if (*render) {
    ropt.width = ropt.height = render_res;
    ropt.turntable = turntable;
    ropt.object = render_object.empty() ? nullptr : render_object.c_str();
    size_t frames = 0;
    if (const int rc = ss_render(render_input.c_str(), render_out.c_str(), &ropt, &frames); rc != SS_OK)
      return report(rc);
    std::printf("wrote %zu frame%s\n", frames, frames == 1 ? "" : "s");
    return 0;
  }
  return 0;
}
