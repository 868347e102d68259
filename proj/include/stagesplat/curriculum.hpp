#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagesplat/adam.hpp"
#include "stagesplat/camera.hpp"
#include "stagesplat/densify.hpp"
#include "stagesplat/guidance.hpp"
#include "stagesplat/raster.hpp"
#include "stagesplat/scene.hpp"
#include "stagesplat/targets.hpp"

namespace stagesplat {

/// Scheduling heuristics. The first four are the compared schedules; the
/// last two are ablation variants of the staged schedule.
enum class Heuristic { Holistic, Simultaneous, Iterative, Staged, JointOnly, JointPlusObject };

std::string_view to_string(Heuristic h);
Heuristic heuristic_from_string(std::string_view s);

struct CurriculumConfig {
  long iters_per_object = 1500;
  long warmup_per_object = 450;
  long total_iters = 0;   // 0: iters_per_object * objects
  long warmup_iters = 0;  // 0: warmup_per_object * objects
  double lambda = 8.0;
  double gamma = 0.6;
  double stage2_warmup_fraction = 0.3;
  DensifyConfig densify;
  Heuristic heuristic = Heuristic::Staged;
  double w_object = 1.0;  // simultaneous weights
  double w_edge = 1.0;
  double w_scene = 1.0;
  long translation_iters = 200;

  void validate() const;  // throws ValidationError
  long resolved_total(std::size_t objects) const;
  long resolved_warmup(std::size_t objects) const;
};

/// Weight on the object loss in stage one: lambda (t / T)^2.
double object_loss_weight(double lambda, long iter, long total);
/// First stage-two iteration: smallest t with t >= gamma T.
long stage_boundary(double gamma, long total);
/// Stage-one scene interleave: t mod (n_e + 1) == 0.
bool is_scene_iteration(long iter, std::size_t edge_count);

enum class LossKind { Object, Edge, Scene, Target, Spatial };
std::string_view to_string(LossKind k);

struct LossTraceRecord {
  long iter = 0;
  int stage = 1;  // 0 for the translation pre-phase
  LossKind kind = LossKind::Scene;
  std::string subject;
  double value = 0.0;
};

using LossTrace = std::vector<LossTraceRecord>;

std::string trace_to_csv(const LossTrace& trace);
void write_trace_csv(const LossTrace& trace, const std::string& path);

struct OptimizerConfig {
  CurriculumConfig curriculum;
  CameraIntrinsics intrinsics;
  ViewSamplingConfig sampling;  // radius range is relative to the subject's fit distance
  std::size_t points_per_object = 4096;
  double conflict_delta = 0.0;
  GuidanceParams guidance;
  LearningRates learning_rates;
  RasterSettings raster;
  double background_min = 0.3;
  double background_max = 0.7;
  /// Edge views look at the pair midpoint; otherwise the scene anchor.
  bool edge_view_on_pair = true;
  bool run_translation_phase = true;

  void validate() const;
};

/// Result of one loss evaluation, already routed to its declared objects.
struct LossEval {
  CloudGradients grads;
  double proxy = 0.0;
  std::vector<std::size_t> routed;
};

/// Observer called for every gradient that is about to be applied, with the
/// objects it is declared to touch.
using GradientObserver = std::function<void(LossKind kind, std::span<const std::size_t> declared,
                                            const CloudGradients& grads)>;

/// Single-writer optimization state for one scene. All randomness comes from
/// one seeded stream consumed in a fixed order, so runs are reproducible.
class Optimizer {
 public:
  Optimizer(SceneSpec spec, OptimizerConfig config, std::uint64_t seed);

  const SceneSpec& spec() const { return spec_; }
  const OptimizerConfig& config() const { return config_; }
  const TargetField& targets() const { return targets_; }
  GaussianCloud& cloud() { return cloud_; }
  const GaussianCloud& cloud() const { return cloud_; }
  const AdamState& adam() const { return adam_; }
  const LossTrace& trace() const { return trace_; }
  long total_iters() const { return total_; }
  long warmup_iters() const { return warmup_; }
  long stage_two_start() const { return stage2_start_; }

  /// Timestep anneal in force at an iteration (restarts at stage two for
  /// the staged schedule).
  TimestepAnneal anneal_at(long iter) const;
  int stage_of(long iter) const;
  /// Staged multiplier on the object loss: lambda (t/T)^2, then 1 in stage two.
  double object_weight_at(long iter) const;

  // Losses. Each renders, queries guidance, backpropagates and routes.
  LossEval loss_joint(std::size_t edge, long iter);
  LossEval loss_target(std::size_t edge, std::size_t optimize_object, long iter);
  LossEval loss_obj(std::size_t object, long iter);
  LossEval loss_scene(long iter);

  /// Translation-only pre-phase minimizing the summed joint losses.
  void spatial_error_correction(long iters);
  /// One iteration of the configured heuristic, including densify/prune.
  void step(long iter);
  /// Translation phase (if enabled) followed by all iterations.
  void run();

  void set_gradient_observer(GradientObserver obs) { observer_ = std::move(obs); }
  void set_checkpoint(long interval, std::function<void(long, const Optimizer&)> fn);

  /// Last densify report, if any event happened.
  const std::optional<DensifyReport>& last_densify() const { return last_densify_; }

 private:
  struct Subject {
    std::vector<std::size_t> render;
    std::vector<std::size_t> routed;
    Eigen::Vector3d anchor;
    double extent;
    GuidancePrompt prompt;
    LossKind kind;
    std::string name;
  };
  LossEval evaluate(const Subject& s, long iter);
  void record(long iter, LossKind kind, const std::string& subject, double value);
  void apply(LossKind kind, const CloudGradients& g, std::span<const std::size_t> objects, long iter);
  void step_staged(long iter);
  void step_holistic(long iter);
  void step_simultaneous(long iter);
  void step_iterative(long iter);
  void step_joint_only(long iter);
  void step_joint_plus_object(long iter);
  std::pair<std::size_t, std::size_t> edge_objects(std::size_t edge) const;

  SceneSpec spec_;
  OptimizerConfig config_;
  TargetField targets_;
  NoiseSchedule schedule_;
  GaussianCloud cloud_;
  AdamState adam_;
  DensifyStats stats_;
  Rng rng_;
  LossTrace trace_;
  long total_ = 0, warmup_ = 0, stage2_start_ = 0;
  long current_iter_ = 0;
  GradientObserver observer_;
  long checkpoint_interval_ = 0;
  std::function<void(long, const Optimizer&)> checkpoint_;
  std::optional<DensifyReport> last_densify_;
};

struct RunResult {
  GaussianCloud cloud;
  LossTrace trace;
};

RunResult run_optimization(const SceneSpec& spec, const OptimizerConfig& config, std::uint64_t seed);

}  // namespace stagesplat
