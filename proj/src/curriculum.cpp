#include "stagesplat/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "stagesplat/error.hpp"

namespace stagesplat {

std::string_view to_string(Heuristic h) {
  switch (h) {
    case Heuristic::Holistic: return "holistic";
    case Heuristic::Simultaneous: return "simultaneous";
    case Heuristic::Iterative: return "iterative";
    case Heuristic::Staged: return "staged";
    case Heuristic::JointOnly: return "joint-only";
    case Heuristic::JointPlusObject: return "joint-obj";
  }
  return "staged";
}

Heuristic heuristic_from_string(std::string_view s) {
  for (Heuristic h : {Heuristic::Holistic, Heuristic::Simultaneous, Heuristic::Iterative, Heuristic::Staged,
                      Heuristic::JointOnly, Heuristic::JointPlusObject})
    if (to_string(h) == s) return h;
  throw ValidationError("unknown heuristic '" + std::string(s) + "'");
}

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::Object: return "obj";
    case LossKind::Edge: return "edge";
    case LossKind::Scene: return "scene";
    case LossKind::Target: return "target";
    case LossKind::Spatial: return "spatial";
  }
  return "scene";
}

void CurriculumConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be non-negative");
  if (w_object < 0 || w_edge < 0 || w_scene < 0) throw ValidationError("simultaneous weights must be non-negative");
  if (iters_per_object <= 0 && total_iters <= 0) throw ValidationError("iteration budget must be positive");
  if (total_iters < 0 || warmup_iters < 0 || translation_iters < 0)
    throw ValidationError("iteration counts must be non-negative");
  if (!(stage2_warmup_fraction >= 0.0 && stage2_warmup_fraction <= 1.0))
    throw ValidationError("stage-two warm-up fraction must lie in [0, 1]");
  densify.validate();
}

long CurriculumConfig::resolved_total(std::size_t objects) const {
  return total_iters > 0 ? total_iters : iters_per_object * static_cast<long>(objects);
}

long CurriculumConfig::resolved_warmup(std::size_t objects) const {
  return warmup_iters > 0 ? warmup_iters : warmup_per_object * static_cast<long>(objects);
}

double object_loss_weight(double lambda, long iter, long total) {
  const double f = static_cast<double>(iter) / static_cast<double>(total);
  return lambda * f * f;
}

long stage_boundary(double gamma, long total) {
  return static_cast<long>(std::ceil(gamma * static_cast<double>(total) - 1e-9));
}

bool is_scene_iteration(long iter, std::size_t edge_count) {
  return iter % static_cast<long>(edge_count + 1) == 0;
}

std::string trace_to_csv(const LossTrace& trace) {
  std::string out = "iter,stage,kind,subject,value\n";
  char buf[64];
  for (const auto& r : trace) {
    out += std::to_string(r.iter);
    out += ',';
    out += std::to_string(r.stage);
    out += ',';
    out += to_string(r.kind);
    out += ',';
    out += r.subject;
    std::snprintf(buf, sizeof(buf), ",%.17g\n", r.value);
    out += buf;
  }
  return out;
}

void write_trace_csv(const LossTrace& trace, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << trace_to_csv(trace);
}

void OptimizerConfig::validate() const {
  curriculum.validate();
  intrinsics.validate();
  ViewSamplingConfig s = sampling;
  s.validate();
  if (points_per_object < 1) throw ValidationError("points_per_object must be at least 1");
  if (conflict_delta < 0) throw ValidationError("conflict delta must be non-negative");
  if (!(background_min <= background_max) || background_min < 0 || background_max > 1)
    throw ValidationError("background range must be ordered within [0, 1]");
}

namespace {
OptimizerConfig validated(OptimizerConfig c) {
  c.validate();
  return c;
}
}  // namespace

Optimizer::Optimizer(SceneSpec spec, OptimizerConfig config, std::uint64_t seed)
    : spec_(std::move(spec)),
      config_(validated(std::move(config))),
      targets_(spec_, config_.intrinsics, config_.conflict_delta),
      cloud_(assemble_scene(spec_, config_.points_per_object, seed)),
      adam_(cloud_),
      rng_(mix64(seed) ^ 0x5eedULL) {
  total_ = config_.curriculum.resolved_total(spec_.objects.size());
  warmup_ = config_.curriculum.resolved_warmup(spec_.objects.size());
  stage2_start_ = stage_boundary(config_.curriculum.gamma, total_);
  stats_.reset(cloud_.size());
}

void Optimizer::set_checkpoint(long interval, std::function<void(long, const Optimizer&)> fn) {
  checkpoint_interval_ = interval;
  checkpoint_ = std::move(fn);
}

TimestepAnneal Optimizer::anneal_at(long iter) const {
  TimestepAnneal a;
  a.warmup_iters = warmup_;
  if (config_.curriculum.heuristic == Heuristic::Staged && iter >= stage2_start_) {
    a.start_iter = stage2_start_;
    a.warmup_iters = std::lround(config_.curriculum.stage2_warmup_fraction * static_cast<double>(total_ - stage2_start_));
  }
  return a;
}

int Optimizer::stage_of(long iter) const {
  if (iter < 0) return 0;
  if (config_.curriculum.heuristic == Heuristic::Staged && iter >= stage2_start_) return 2;
  return 1;
}

double Optimizer::object_weight_at(long iter) const {
  if (iter >= stage2_start_) return 1.0;
  return object_loss_weight(config_.curriculum.lambda, iter, total_);
}

std::pair<std::size_t, std::size_t> Optimizer::edge_objects(std::size_t edge) const {
  const auto& e = spec_.edges.at(edge);
  return {spec_.object_index(e.src), spec_.object_index(e.dst)};
}

void Optimizer::record(long iter, LossKind kind, const std::string& subject, double value) {
  trace_.push_back({iter, stage_of(iter), kind, subject, value});
}

LossEval Optimizer::evaluate(const Subject& s, long iter) {
  const CameraIntrinsics& intr = config_.intrinsics;
  ViewSamplingConfig sampling = config_.sampling;
  const double fit = fit_distance(s.extent, intr);
  sampling.radius_min *= fit;
  sampling.radius_max *= fit;
  const ViewSample view = sample_view(rng_, sampling, s.anchor);
  const double gray = rng_.uniform(config_.background_min, config_.background_max);
  const Eigen::Vector3d bg = Eigen::Vector3d::Constant(gray);
  const double t = sample_timestep(rng_, iter, anneal_at(iter));
  const std::vector<double> noise = sample_noise(rng_, static_cast<std::size_t>(intr.width) * intr.height * 3);

  const RenderOutput z = render(cloud_, s.render, view, intr, bg, config_.raster);
  const ScoreGrad sg = guidance_grad(z.image, s.prompt, view, bg, targets_, schedule_, t, noise, config_.guidance);
  LossEval out{backward(cloud_, s.render, view, intr, bg, sg.grad_image, config_.raster), sg.scalar_loss, s.routed};
  out.grads.restrict_to(cloud_, s.routed);
  stats_.accumulate(out.grads, 1.0 / (static_cast<double>(intr.width) * intr.height));
  record(iter, s.kind, s.name, sg.scalar_loss);
  return out;
}

LossEval Optimizer::loss_joint(std::size_t edge, long iter) {
  const auto [i, j] = edge_objects(edge);
  Subject s;
  s.render = {i, j};
  s.routed = {i, j};
  if (config_.edge_view_on_pair) {
    s.anchor = targets_.edge_anchor(edge);
    s.extent = targets_.edge_extent(edge);
  } else {
    s.anchor = targets_.scene_anchor();
    s.extent = targets_.scene_extent();
  }
  s.prompt = edge_prompt(edge);
  s.kind = iter < 0 ? LossKind::Spatial : LossKind::Edge;
  s.name = spec_.edge_id(edge);
  return evaluate(s, iter);
}

LossEval Optimizer::loss_target(std::size_t edge, std::size_t optimize_object, long iter) {
  const auto [i, j] = edge_objects(edge);
  if (optimize_object != i && optimize_object != j)
    throw ValidationError("targeted object must be one of the edge's endpoints");
  Subject s;
  s.render = {i, j};
  s.routed = {optimize_object};
  s.anchor = config_.edge_view_on_pair ? targets_.edge_anchor(edge) : targets_.scene_anchor();
  s.extent = config_.edge_view_on_pair ? targets_.edge_extent(edge) : targets_.scene_extent();
  s.prompt = edge_prompt(edge);
  s.kind = LossKind::Target;
  s.name = spec_.edge_id(edge);
  return evaluate(s, iter);
}

LossEval Optimizer::loss_obj(std::size_t object, long iter) {
  Subject s;
  s.render = {object};
  s.routed = {object};
  s.anchor = targets_.object_anchor(object);
  s.extent = targets_.object_extent(object);
  s.prompt = object_prompt(spec_, object);
  s.kind = LossKind::Object;
  s.name = spec_.objects.at(object).id;
  return evaluate(s, iter);
}

LossEval Optimizer::loss_scene(long iter) {
  Subject s;
  s.render = cloud_.all_objects();
  s.routed = s.render;
  s.anchor = targets_.scene_anchor();
  s.extent = targets_.scene_extent();
  s.prompt = scene_prompt();
  s.kind = LossKind::Scene;
  s.name = "scene";
  return evaluate(s, iter);
}

void Optimizer::apply(LossKind kind, const CloudGradients& g, std::span<const std::size_t> objects, long iter) {
  if (observer_) observer_(kind, objects, g);
  adam_.step_gaussians(cloud_, g, objects, config_.learning_rates.mean_at(iter, total_), config_.learning_rates);
}

namespace {

std::vector<std::size_t> merged(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

}  // namespace

void Optimizer::spatial_error_correction(long iters) {
  if (spec_.edges.empty()) return;
  std::vector<std::size_t> active;
  for (std::size_t e = 0; e < spec_.edges.size(); ++e) {
    const auto [i, j] = edge_objects(e);
    active = merged(active, {i, j});
  }
  for (long k = 0; k < iters; ++k) {
    const long label = k - iters;
    CloudGradients total(cloud_.size(), cloud_.object_count());
    for (std::size_t e = 0; e < spec_.edges.size(); ++e) {
      const LossEval ev = loss_joint(e, label);
      for (std::size_t o = 0; o < total.translations.size(); ++o) total.translations[o] += ev.grads.translations[o];
    }
    // Only translations move in this phase.
    CloudGradients only_t(cloud_.size(), cloud_.object_count());
    only_t.translations = total.translations;
    if (observer_) observer_(LossKind::Spatial, active, only_t);
    adam_.step_translations(cloud_, only_t, active, config_.learning_rates.translation);
  }
}

void Optimizer::step_staged(long iter) {
  const std::size_t n_e = spec_.edges.size();
  if (iter < stage2_start_) {
    if (n_e == 0 || is_scene_iteration(iter, n_e)) {
      const LossEval s = loss_scene(iter);
      apply(LossKind::Scene, s.grads, s.routed, iter);
      return;
    }
    const std::size_t e = static_cast<std::size_t>(iter) % n_e;
    const auto [i, j] = edge_objects(e);
    LossEval joint = loss_joint(e, iter);
    const double w = object_weight_at(iter);
    joint.grads.add_scaled(loss_obj(i, iter).grads, w);
    joint.grads.add_scaled(loss_obj(j, iter).grads, w);
    apply(LossKind::Edge, joint.grads, joint.routed, iter);
    return;
  }
  if (n_e == 0) {
    CloudGradients g(cloud_.size(), cloud_.object_count());
    for (std::size_t o = 0; o < spec_.objects.size(); ++o) g.add_scaled(loss_obj(o, iter).grads, 1.0);
    apply(LossKind::Object, g, cloud_.all_objects(), iter);
    return;
  }
  const std::size_t e = static_cast<std::size_t>(iter) % n_e;
  const auto [i, j] = edge_objects(e);
  CloudGradients g(cloud_.size(), cloud_.object_count());
  for (std::size_t o : {i, j}) g.add_scaled(loss_target(e, o, iter).grads, 1.0);
  for (std::size_t o : {i, j}) g.add_scaled(loss_obj(o, iter).grads, object_weight_at(iter));
  const std::vector<std::size_t> routed{std::min(i, j), std::max(i, j)};
  apply(LossKind::Target, g, routed, iter);
}

void Optimizer::step_holistic(long iter) {
  const LossEval s = loss_scene(iter);
  apply(LossKind::Scene, s.grads, s.routed, iter);
}

void Optimizer::step_simultaneous(long iter) {
  const auto& c = config_.curriculum;
  CloudGradients g(cloud_.size(), cloud_.object_count());
  // Zero-weight terms are skipped entirely so they consume no randomness.
  if (c.w_object != 0.0)
    for (std::size_t o = 0; o < spec_.objects.size(); ++o) g.add_scaled(loss_obj(o, iter).grads, c.w_object);
  if (c.w_edge != 0.0)
    for (std::size_t e = 0; e < spec_.edges.size(); ++e) g.add_scaled(loss_joint(e, iter).grads, c.w_edge);
  if (c.w_scene != 0.0) g.add_scaled(loss_scene(iter).grads, c.w_scene);
  apply(LossKind::Scene, g, cloud_.all_objects(), iter);
}

void Optimizer::step_iterative(long iter) {
  for (std::size_t o = 0; o < spec_.objects.size(); ++o) {
    const LossEval ev = loss_obj(o, iter);
    apply(LossKind::Object, ev.grads, ev.routed, iter);
  }
  for (std::size_t e = 0; e < spec_.edges.size(); ++e) {
    const LossEval ev = loss_joint(e, iter);
    apply(LossKind::Edge, ev.grads, ev.routed, iter);
  }
  const LossEval s = loss_scene(iter);
  apply(LossKind::Scene, s.grads, s.routed, iter);
}

void Optimizer::step_joint_only(long iter) {
  if (spec_.edges.empty()) return step_holistic(iter);
  const LossEval ev = loss_joint(static_cast<std::size_t>(iter) % spec_.edges.size(), iter);
  apply(LossKind::Edge, ev.grads, ev.routed, iter);
}

void Optimizer::step_joint_plus_object(long iter) {
  if (spec_.edges.empty()) return step_holistic(iter);
  const std::size_t e = static_cast<std::size_t>(iter) % spec_.edges.size();
  const auto [i, j] = edge_objects(e);
  LossEval joint = loss_joint(e, iter);
  joint.grads.add_scaled(loss_obj(i, iter).grads, 1.0);
  joint.grads.add_scaled(loss_obj(j, iter).grads, 1.0);
  apply(LossKind::Edge, joint.grads, joint.routed, iter);
}

void Optimizer::step(long iter) {
  current_iter_ = iter;
  switch (config_.curriculum.heuristic) {
    case Heuristic::Holistic: step_holistic(iter); break;
    case Heuristic::Simultaneous: step_simultaneous(iter); break;
    case Heuristic::Iterative: step_iterative(iter); break;
    case Heuristic::Staged: step_staged(iter); break;
    case Heuristic::JointOnly: step_joint_only(iter); break;
    case Heuristic::JointPlusObject: step_joint_plus_object(iter); break;
  }
  if (config_.curriculum.densify.is_refinement_iteration(iter)) {
    DensifyReport report = densify_and_prune(cloud_, stats_, config_.curriculum.densify, targets_.scene_extent(), rng_);
    adam_.remap(report.source, cloud_.object_count());
    stats_.reset(cloud_.size());
    last_densify_ = std::move(report);
  }
  if (checkpoint_ && checkpoint_interval_ > 0 && (iter + 1) % checkpoint_interval_ == 0) checkpoint_(iter, *this);
}

void Optimizer::run() {
  if (config_.run_translation_phase) spatial_error_correction(config_.curriculum.translation_iters);
  stats_.reset(cloud_.size());
  for (long t = 0; t < total_; ++t) step(t);
}

RunResult run_optimization(const SceneSpec& spec, const OptimizerConfig& config, std::uint64_t seed) {
  Optimizer opt(spec, config, seed);
  opt.run();
  return {opt.cloud(), opt.trace()};
}

}  // namespace stagesplat
