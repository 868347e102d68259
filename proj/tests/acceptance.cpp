// Acceptance checks. Prints one PASS/FAIL line per selected criterion and
// exits non-zero if any of them failed.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "stagesplat/analysis.hpp"
#include "stagesplat/curriculum.hpp"
#include "stagesplat/guidance.hpp"
#include "stagesplat/harness.hpp"

using namespace stagesplat;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// 1 ----------------------------------------------------------------------

Verdict gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const oracle::GradCheckResult r = oracle::gradient_check(40, 2024);
  const double secs = seconds_since(t0);
  Verdict v{r.ok() && secs < 120, ""};
  std::ostringstream d;
  d << "40 scenes, " << fmt("%.1fs", secs) << ";";
  for (const auto& c : r.classes)
    d << " " << c.name << " " << c.checked - c.failed << "/" << c.checked << " (worst " << fmt("%.1e", c.worst)
      << ", bare h " << c.plain_failed << " off)";
  d << "; translation = sum of mean grads " << (r.translation_sum_exact ? "exact" : "NOT exact");
  v.detail = d.str();
  return v;
}

// 2 ----------------------------------------------------------------------

Verdict compositing() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CameraIntrinsics intr;
  intr.width = intr.height = 32;
  int pixels = 0, bad_monotone = 0, bad_range = 0, bad_sum = 0;
  while (pixels < 1000) {
    GaussianCloud cloud = oracle::random_cloud(gen, 12);
    ViewSample view;
    view.azimuth = -180 + 360 * u(gen);
    view.elevation = -30 + 90 * u(gen);
    view.radius = 2.5 + u(gen);
    const Eigen::Vector3d bg(u(gen), u(gen), u(gen));
    const RenderOutput r = render(cloud, cloud.all_objects(), view, intr, bg);
    for (int k = 0; k < 50; ++k, ++pixels) {
      const int x = static_cast<int>(u(gen) * intr.width), y = static_cast<int>(u(gen) * intr.height);
      const auto contrib = pixel_contributions(r, x, y);
      double t = 1.0;
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      bool mono = true;
      for (const auto& pc : contrib) {
        if (std::abs(pc.transmittance - t) > 1e-12 || pc.alpha < 0 || pc.alpha > kAlphaClamp) mono = false;
        const Splat2D* s = nullptr;
        for (const auto& sp : r.splats)
          if (sp.source_index == pc.source_index) s = &sp;
        c += s->color * pc.alpha * t;
        const double next = t * (1 - pc.alpha);
        if (next > t) mono = false;
        t = next;
      }
      bad_monotone += !mono;
      for (int ch = 0; ch < 3; ++ch) {
        const double p = r.pixel(x, y, ch);
        bad_range += p < 0 || p > 1;
        bad_sum += std::abs(p - (c[ch] + t * bg[ch])) > 1e-12;
      }
    }
  }
  // Closed form: two coincident splats of opacity 0.5 at the pixel center.
  const Eigen::Vector3d c1(0.9, 0.1, 0.3), c2(0.2, 0.7, 0.5), bg(0.4, 0.4, 0.8);
  auto splat = [](double depth, const Eigen::Vector3d& col, std::size_t idx) {
    Splat2D s;
    s.mean_2d = {8.5, 8.5};
    s.conic = {0.5, 0.0, 0.5};
    s.depth = depth;
    s.alpha_max = 0.5;
    s.color = col;
    s.source_index = idx;
    s.radius = 5;
    return s;
  };
  CameraIntrinsics small;
  small.width = small.height = 16;
  const RenderOutput r2 = composite({splat(2.0, c2, 1), splat(1.0, c1, 0)}, small, bg);
  double closed = 0;
  for (int ch = 0; ch < 3; ++ch)
    closed = std::max(closed, std::abs(r2.pixel(8, 8, ch) - (0.5 * c1[ch] + 0.25 * c2[ch] + 0.25 * bg[ch])));
  Verdict v;
  v.pass = bad_monotone == 0 && bad_range == 0 && bad_sum == 0 && closed < 1e-6;
  v.detail = std::to_string(pixels) + " random pixels: " + std::to_string(bad_monotone) +
             " non-monotone transmittance, " + std::to_string(bad_range) + " channels outside [0,1], " +
             std::to_string(bad_sum) + " blend mismatches; two-splat closed form error " + fmt("%.1e", closed);
  return v;
}

// 3 ----------------------------------------------------------------------

Verdict unbiasedness() {
  Rng r(31);
  const std::size_t n = 16 * 16 * 3;
  std::vector<double> z(n), target(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = r.uniform();
    target[i] = r.uniform();
  }
  NoiseSchedule s;
  Verdict v{true, "10^4 draws:"};
  for (double t : {0.1, 0.5, 0.9}) {
    std::vector<double> mean(n, 0.0);
    for (int d = 0; d < 10000; ++d) {
      const auto eps = sample_noise(r, n);
      const auto g = sds_surrogate_grad(z, target, t, eps, s).grad_image;
      for (std::size_t i = 0; i < n; ++i) mean[i] += g[i] / 10000.0;
    }
    const double ab = std::pow(std::cos(std::numbers::pi * t / 2), 2);
    const double k = (1 - ab) * std::sqrt(ab) / std::sqrt(1 - ab);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = k * (z[i] - target[i]);
      num += (mean[i] - e) * (mean[i] - e);
      den += e * e;
    }
    const double rel = std::sqrt(num / den);
    v.pass = v.pass && rel < 0.02;
    v.detail += " t=" + fmt("%.1f", t) + " rel " + fmt("%.2e", rel);
  }
  return v;
}

// 4 ----------------------------------------------------------------------

SceneSpec chain3() {
  return parse_scene_spec(R"({"global_prompt": "g", "objects": [
    {"id": "a", "prompt": "a", "primitive": "sphere", "center": [-0.6, 0, 0.3], "size": 0.3},
    {"id": "b", "prompt": "b", "primitive": "box", "center": [0, 0, 0.3], "size": 0.3},
    {"id": "c", "prompt": "c", "primitive": "cylinder", "center": [0.6, 0, 0.3], "size": 0.3}],
    "edges": [{"src": "a", "dst": "b", "prompt": "ab"}, {"src": "c", "dst": "b", "prompt": "cb"}]})");
}

Verdict schedules() {
  int failures = 0;
  auto expect = [&](bool ok) { failures += !ok; };
  for (long t : {0L, 1L, 250L, 300L, 599L, 999L}) {
    const double f = static_cast<double>(t) / 1000.0;
    expect(object_loss_weight(8.0, t, 1000) == 8.0 * f * f);
  }
  expect(stage_boundary(0.6, 1000) == 600);
  expect(stage_boundary(0.6, 6000) == 3600);
  expect(stage_boundary(0.6, 7) == 5);
  for (long t = 0; t < 40; ++t) expect(is_scene_iteration(t, 3) == (t % 4 == 0));

  TimestepAnneal a;
  a.warmup_iters = 450;
  expect(a.t_max(0) == 0.98);
  expect(std::abs(a.t_max(225) - 0.74) < 1e-15);
  expect(a.t_max(450) == 0.5);
  expect(a.t_max(5000) == 0.5);
  Rng r(5);
  double lo = 1.0, hi = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double t = sample_timestep(r, 1000, a);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  expect(lo >= 0.02 && hi <= 0.5);

  OptimizerConfig cfg;
  cfg.curriculum.total_iters = 1000;
  cfg.curriculum.warmup_iters = 450;
  cfg.intrinsics.width = cfg.intrinsics.height = 16;
  cfg.points_per_object = 16;
  Optimizer opt(chain3(), cfg, 1);
  expect(opt.stage_of(599) == 1 && opt.stage_of(600) == 2);
  expect(opt.anneal_at(599).start_iter == 0 && opt.anneal_at(600).start_iter == 600);
  expect(opt.anneal_at(600).warmup_iters == 120);
  expect(opt.anneal_at(600).t_max(600) == 0.98 && opt.anneal_at(720).t_max(720) == 0.5);

  // Dispatch at the boundary: 599 takes the joint path, 600 the targeted one.
  std::vector<LossKind> kinds;
  opt.set_gradient_observer([&](LossKind k, std::span<const std::size_t>, const CloudGradients&) { kinds.push_back(k); });
  opt.step(598);
  opt.step(599);
  opt.step(600);
  expect(kinds == std::vector<LossKind>{LossKind::Edge, LossKind::Edge, LossKind::Target});
  // 598 is not a scene step (598 mod 3 = 1); 597 is.
  kinds.clear();
  opt.step(597);
  expect(kinds == std::vector<LossKind>{LossKind::Scene});
  return {failures == 0, "object weight, gamma boundary, scene interleave, anneal and stage-two restart: " +
                             std::to_string(failures) + " mismatches"};
}

// 5 ----------------------------------------------------------------------

Verdict spatial_correction() {
  const auto t0 = std::chrono::steady_clock::now();
  const SceneSpec spec = parse_scene_spec(R"({"global_prompt": "g", "objects": [
    {"id": "A", "prompt": "a", "primitive": "sphere", "center": [-0.6, 0, 0.4], "size": 0.4,
     "color_hint": [0.8, 0.3, 0.2]},
    {"id": "B", "prompt": "b", "primitive": "box", "center": [0.6, 0, 0.4], "size": 0.4,
     "color_hint": [0.2, 0.4, 0.8], "azimuth_offset_deg": 90}],
    "edges": [{"src": "A", "dst": "B", "prompt": "a beside b"}]})");
  OptimizerConfig cfg;
  cfg.intrinsics.width = cfg.intrinsics.height = 128;
  cfg.points_per_object = 4096;
  const Eigen::Vector3d plant(0.5, 0.0, 0.0);
  bool ok = true;
  std::string detail = "plant (0.5,0,0) on A, 200 iterations at 128x128:";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Optimizer opt(spec, cfg, seed);
    GaussianCloud& c = opt.cloud();
    for (std::size_t i = c.partitions[0].begin; i < c.partitions[0].end; ++i) c.means[i] += plant;
    const GaussianCloud before = c;
    opt.spatial_error_correction(200);
    const Eigen::Vector3d t = c.translations[0];
    const double err = (t + plant).norm();
    const bool frozen = c.means == before.means && c.log_scales == before.log_scales &&
                        c.rotations == before.rotations && c.opacity_logits == before.opacity_logits &&
                        c.colors == before.colors;
    ok = ok && err < 0.1 && frozen;
    char buf[160];
    std::snprintf(buf, sizeof buf, " seed %llu t_A=(%.3f,%.3f,%.3f) err %.3f%s;", static_cast<unsigned long long>(seed),
                  t.x(), t.y(), t.z(), err, frozen ? "" : " NON-TRANSLATION PARAMETERS CHANGED");
    detail += buf;
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 300;
  detail += " " + fmt("%.0fs", secs);
  return {ok, detail};
}

// 6 and 7 ----------------------------------------------------------------

struct Experiment {
  std::string scene = std::string(STAGESPLAT_SCENES) + "/desk4.json";
  long iters = 1500;
  int resolution = 128;
  std::size_t points = 1024;
  double delta = 0.1;
  std::size_t window = 101;
  std::uint64_t seed = 0;
  fs::path out = "acceptance_runs";
};

std::vector<SeriesPoint> filtered(const LossTrace& trace, std::initializer_list<LossKind> kinds, long begin, long end,
                                  std::size_t window) {
  const auto s = slice(loss_series(trace, kinds), begin, end);
  return median_filter(s, window);
}

double tail_mean(const std::vector<SeriesPoint>& s, double fraction) {
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(s.size())));
  return mean_value(std::span<const SeriesPoint>(s).last(n));
}

struct RunStats {
  double final_obj = 0, final_edge = 0;
  double final_avg() const { return 0.5 * (final_obj + final_edge); }
};

RunStats final_stats(const LossTrace& trace, long total, std::size_t window) {
  const auto obj = filtered(trace, {LossKind::Object}, 0, total, window);
  const auto edge = filtered(trace, {LossKind::Edge, LossKind::Target}, 0, total, window);
  return {tail_mean(obj, 0.1), tail_mean(edge, 0.1)};
}

// Mean silhouette IoU of each object rendered alone against its object
// target, over eight azimuths.
double object_iou(const GaussianCloud& cloud, const TargetField& field, const CameraIntrinsics& intr) {
  double sum = 0;
  int n = 0;
  for (std::size_t o = 0; o < cloud.object_count(); ++o) {
    for (int k = 0; k < 8; ++k) {
      ViewSample v;
      v.azimuth = -180.0 + 45.0 * k;
      v.elevation = 15.0;
      v.look_at = field.object_anchor(o);
      v.radius = fit_distance(field.object_extent(o), intr);
      const std::size_t only[] = {o};
      const RenderOutput r = render(cloud, only, v, intr, Eigen::Vector3d::Zero());
      sum += silhouette_iou(r.alpha, field.object_coverage(o, v));
      ++n;
    }
  }
  return sum / n;
}

struct ExperimentResults {
  std::map<Heuristic, LossTrace> traces;
  std::map<Heuristic, GaussianCloud> clouds;
  long total = 0, boundary = 0;
  double seconds_6 = 0;
};

ExperimentResults run_experiment(const Experiment& e, const std::vector<Heuristic>& hs) {
  ExperimentResults res;
  const auto t0 = std::chrono::steady_clock::now();
  for (Heuristic h : hs) {
    RunConfig c;
    c.spec_path = e.scene;
    c.seed = e.seed;
    c.out_dir = (e.out / std::string(to_string(h))).string();
    c.optimizer.curriculum.heuristic = h;
    c.optimizer.curriculum.total_iters = e.iters;
    c.optimizer.intrinsics.width = c.optimizer.intrinsics.height = e.resolution;
    c.optimizer.points_per_object = e.points;
    c.optimizer.conflict_delta = e.delta;
    const auto th = std::chrono::steady_clock::now();
    RunArtifacts art = cmd_run(c);
    std::printf("  ran %s in %.0fs\n", std::string(to_string(h)).c_str(), seconds_since(th));
    std::fflush(stdout);
    res.total = art.total_iters;
    res.traces[h] = std::move(art.trace);
    res.clouds[h] = std::move(art.cloud);
    if (h == Heuristic::Simultaneous) res.seconds_6 = seconds_since(t0);
  }
  res.boundary = stage_boundary(0.6, res.total);
  return res;
}

Verdict loss_dynamics(const Experiment& e, const ExperimentResults& r) {
  const LossTrace& st = r.traces.at(Heuristic::Staged);
  const auto e1 = filtered(st, {LossKind::Edge}, 0, r.boundary, e.window);
  const auto e2 = filtered(st, {LossKind::Target}, r.boundary, r.total, e.window);
  const auto ob = filtered(st, {LossKind::Object}, 0, r.total, e.window);
  const double stage1_drop = 1.0 - e1.back().value / e1.front().value;
  const double stage2_drift = std::abs(e2.back().value / e2.front().value - 1.0);
  const double obj_fall = 1.0 - ob.back().value / ob.front().value;
  const RunStats s = final_stats(st, r.total, e.window);
  const RunStats it = final_stats(r.traces.at(Heuristic::Iterative), r.total, e.window);
  const RunStats si = final_stats(r.traces.at(Heuristic::Simultaneous), r.total, e.window);
  const bool a = stage1_drop >= 0.5 && stage2_drift <= 0.2 && obj_fall >= 0.3;
  const bool b = it.final_avg() >= 2.0 * s.final_avg();
  const bool c = si.final_avg() > s.final_avg();
  const bool fast = r.seconds_6 < 1800;
  std::ostringstream d;
  d << "(a) " << (a ? "ok" : "FAIL") << ": staged stage-1 edge drop " << fmt("%.0f%%", 100 * stage1_drop)
    << " [>= 50%], stage-2 drift " << fmt("%.0f%%", 100 * stage2_drift) << " [<= 20%], object fall "
    << fmt("%.0f%%", 100 * obj_fall) << " [>= 30%]; (b) " << (b ? "ok" : "FAIL") << ": iterative/staged final "
    << "(edge+obj)/2 = " << fmt("%.2f", it.final_avg() / s.final_avg()) << " [>= 2]; (c) " << (c ? "ok" : "FAIL")
    << ": simultaneous/staged = " << fmt("%.2f", si.final_avg() / s.final_avg()) << " [> 1]; finals obj/edge "
    << "staged " << fmt("%.2e", s.final_obj) << "/" << fmt("%.2e", s.final_edge) << ", iterative "
    << fmt("%.2e", it.final_obj) << "/" << fmt("%.2e", it.final_edge) << ", simultaneous "
    << fmt("%.2e", si.final_obj) << "/" << fmt("%.2e", si.final_edge) << "; " << fmt("%.0fs", r.seconds_6);
  return {a && b && c && fast, d.str()};
}

Verdict ablation(const Experiment& e, const ExperimentResults& r) {
  const SceneSpec spec = load_scene_spec(e.scene);
  CameraIntrinsics intr;
  intr.width = intr.height = e.resolution;
  const TargetField field(spec, intr, e.delta);
  const double iou_staged = object_iou(r.clouds.at(Heuristic::Staged), field, intr);
  const double iou_joint = object_iou(r.clouds.at(Heuristic::JointOnly), field, intr);
  const double edge_staged = final_stats(r.traces.at(Heuristic::Staged), r.total, e.window).final_edge;
  const double edge_jo = final_stats(r.traces.at(Heuristic::JointPlusObject), r.total, e.window).final_edge;
  const bool a = iou_joint < iou_staged;
  const bool b = edge_jo > edge_staged;
  std::ostringstream d;
  d << "joint-only object IoU " << fmt("%.3f", iou_joint) << " vs staged " << fmt("%.3f", iou_staged) << " "
    << (a ? "ok" : "FAIL") << "; joint+obj final edge " << fmt("%.2e", edge_jo) << " vs staged "
    << fmt("%.2e", edge_staged) << " " << (b ? "ok" : "FAIL");
  return {a && b, d.str()};
}

// 8 ----------------------------------------------------------------------

Verdict routing_fuzz() {
  std::mt19937_64 gen(8);
  long steps = 0, violations = 0, partition_errors = 0, misaligned = 0, densify_events = 0;
  const Heuristic hs[] = {Heuristic::Holistic, Heuristic::Simultaneous, Heuristic::Iterative, Heuristic::Staged};
  for (int round = 0; round < 8; ++round) {
    const Heuristic h = hs[round % 4];
    OptimizerConfig c;
    c.curriculum.heuristic = h;
    c.curriculum.total_iters = 125;
    c.curriculum.warmup_iters = 30;
    c.curriculum.densify.start_iter = 5;
    c.curriculum.densify.interval = 10;
    c.curriculum.densify.end_iter = 120;
    c.curriculum.densify.grad_threshold = std::uniform_real_distribution<double>(1e-7, 1e-5)(gen);
    c.curriculum.densify.opacity_prune_threshold = 0.05;
    c.curriculum.densify.max_gaussians = 400 + gen() % 200;
    c.intrinsics.width = c.intrinsics.height = 16;
    c.points_per_object = 24 + gen() % 40;
    c.conflict_delta = 0.2;
    c.learning_rates.opacity = 0.3;  // drives prunes
    c.curriculum.w_object = 0.5 + (gen() % 3);
    Optimizer opt(chain3(), c, gen());
    opt.set_gradient_observer([&](LossKind, std::span<const std::size_t> declared, const CloudGradients& g) {
      const std::set<std::size_t> allowed(declared.begin(), declared.end());
      const GaussianCloud& cl = opt.cloud();
      for (std::size_t i = 0; i < g.means.size(); ++i) {
        const double mag = g.means[i].squaredNorm() + g.log_scales[i].squaredNorm() + g.rotations[i].squaredNorm() +
                           g.colors[i].squaredNorm() + g.opacity_logits[i] * g.opacity_logits[i];
        if (mag != 0.0 && !allowed.count(cl.object_of(i))) ++violations;
      }
      for (std::size_t o = 0; o < g.translations.size(); ++o)
        if (g.translations[o].squaredNorm() != 0.0 && !allowed.count(o)) ++violations;
    });
    for (long t = 0; t < 125; ++t, ++steps) {
      opt.step(t);
      if (c.curriculum.densify.is_refinement_iteration(t)) ++densify_events;
      try {
        opt.cloud().check_invariants();
        const auto& parts = opt.cloud().partitions;
        std::size_t expect = 0;
        for (const auto& p : parts) {
          if (p.begin != expect || p.end < p.begin) ++partition_errors;
          expect = p.end;
        }
        if (expect != opt.cloud().size()) ++partition_errors;
      } catch (const std::exception&) {
        ++partition_errors;
      }
      if (!opt.adam().aligned_with(opt.cloud().size(), opt.cloud().object_count())) ++misaligned;
    }
  }
  const bool ok = violations == 0 && partition_errors == 0 && misaligned == 0 && steps >= 1000;
  return {ok, std::to_string(steps) + " steps over 4 heuristics, " + std::to_string(densify_events) +
                  " densify/prune events: " + std::to_string(violations) + " out-of-partition gradients, " +
                  std::to_string(partition_errors) + " partition errors, " + std::to_string(misaligned) +
                  " Adam misalignments"};
}

// 9 ----------------------------------------------------------------------

Verdict determinism(const fs::path& out) {
  RunConfig c;
  c.spec_path = std::string(STAGESPLAT_SCENES) + "/knight_horse.json";
  c.seed = 42;
  c.optimizer.curriculum.total_iters = 40;
  c.optimizer.curriculum.translation_iters = 10;
  c.optimizer.curriculum.densify.start_iter = 10;
  c.optimizer.curriculum.densify.interval = 10;
  c.optimizer.curriculum.densify.grad_threshold = 1e-6;
  c.optimizer.intrinsics.width = c.optimizer.intrinsics.height = 48;
  c.optimizer.points_per_object = 300;
  std::vector<std::pair<std::string, std::string>> outputs;
  for (const char* threads : {"1", "1", "4", "3"}) {
    setenv("SPLAT_THREADS", threads, 1);
    c.out_dir = (out / ("det_" + std::to_string(outputs.size()) + "_t" + threads)).string();
    cmd_run(c);
    outputs.emplace_back(slurp(fs::path(c.out_dir) / "final.ply"), slurp(fs::path(c.out_dir) / "trace.csv"));
  }
  unsetenv("SPLAT_THREADS");
  bool same = true;
  for (const auto& o : outputs) same = same && o == outputs.front() && !o.first.empty() && !o.second.empty();
  return {same, "4 runs (SPLAT_THREADS 1, 1, 4, 3): final.ply and trace.csv " +
                    std::string(same ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  Experiment e;
  std::string out = "acceptance_runs";
  app.add_option("criteria", selected, "Criteria to run (default: all)");
  app.add_option("--out", out, "Directory for experiment artifacts");
  app.add_option("--iters", e.iters, "Budget for the heuristic comparison");
  app.add_option("--delta", e.delta, "Conflict displacement for the comparison");
  app.add_option("--points", e.points, "Initial Gaussians per object for the comparison");
  CLI11_PARSE(app, argc, argv);
  e.out = out;
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::set<int> want(selected.begin(), selected.end());
  fs::create_directories(e.out);

  std::map<int, Verdict> verdicts;
  const std::map<int, std::function<Verdict()>> simple = {
      {1, gradients}, {2, compositing}, {3, unbiasedness}, {4, schedules}, {5, spatial_correction},
      {8, routing_fuzz}, {9, [&] { return determinism(e.out); }}};
  for (int k : want) {
    if (simple.count(k)) verdicts[k] = simple.at(k)();
  }
  if (want.count(6) || want.count(7)) {
    std::vector<Heuristic> hs{Heuristic::Staged};
    if (want.count(6)) hs.insert(hs.end(), {Heuristic::Iterative, Heuristic::Simultaneous});
    if (want.count(7)) hs.insert(hs.end(), {Heuristic::JointOnly, Heuristic::JointPlusObject});
    const ExperimentResults r = run_experiment(e, hs);
    if (want.count(6)) verdicts[6] = loss_dynamics(e, r);
    if (want.count(7)) verdicts[7] = ablation(e, r);
  }
  int failed = 0;
  for (const auto& [k, v] : verdicts) {
    std::printf("CRITERION %d: %s  %s\n", k, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
