#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagesplat/analysis.hpp"
#include "stagesplat/curriculum.hpp"

namespace stagesplat {

/// Everything needed to reproduce one experiment. The on-disk form is JSON
/// (same structured text as scene specs); run manifests use it too, with the
/// scene inlined.
struct RunConfig {
  std::string spec_path;           // used when `scene` is empty
  std::optional<SceneSpec> scene;  // inline scene
  std::string out_dir = "run";
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  long checkpoint_interval = 0;  // 0: final render only
  double eval_azimuth = 30.0;
  double eval_elevation = 20.0;
  std::vector<Heuristic> heuristics;  // for compare
};

/// Parses a config document. Unknown keys and mistyped values raise
/// ValidationError. A relative "spec" path is resolved against base_dir.
RunConfig parse_run_config(std::string_view json_text, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);
/// Applies one override, `key` naming a top-level or dotted key (for
/// example "camera.fov_y_deg") and `json_value` a JSON literal.
void apply_override(RunConfig& config, std::string_view key, std::string_view json_value);
/// Serializes the resolved configuration (scene inlined when available).
std::string run_config_to_json(const RunConfig& config, bool pretty = true);

SceneSpec resolve_scene(const RunConfig& config);

using LogFn = std::function<void(const std::string&)>;

struct ValidateReport {
  std::size_t objects = 0;
  std::size_t edges = 0;
  std::vector<std::string> warnings;
};
ValidateReport cmd_validate(const std::string& spec_path);

struct RunArtifacts {
  std::string dir;
  GaussianCloud cloud;
  LossTrace trace;
  long total_iters = 0;
};
/// Writes trace.csv, final.ply, obj_<id>.ply, manifest.json and
/// render_<iter>.png (every checkpoint interval and at the end) into out_dir.
RunArtifacts cmd_run(const RunConfig& config, const LogFn& log = {});

/// Runs each heuristic into out_dir/<name>, then writes compare.csv (merged
/// traces) and summary.csv.
std::vector<TraceSummary> cmd_compare(const RunConfig& config, std::span<const Heuristic> heuristics,
                                      const LogFn& log = {});

struct RenderRequest {
  std::string input;  // PLY file or run directory
  std::string output;  // PNG path, or a directory for turntables
  std::optional<std::string> object;
  double azimuth = 30.0;
  double elevation = 20.0;
  double radius = 0.0;  // 0: fit the cloud
  int width = 256;
  int height = 256;
  double fov_y_deg = 49.1;
  double background = 1.0;
  bool turntable = false;
};
/// Returns the written file paths.
std::vector<std::string> cmd_render(const RenderRequest& request);

/// Renders the given objects of a cloud to an 8-bit PNG.
void render_png(const GaussianCloud& cloud, std::span<const std::size_t> objects, const ViewSample& view,
                const CameraIntrinsics& intr, double background, const std::string& path);

const char* library_version();

}  // namespace stagesplat
