#include "stagesplat/densify.hpp"

#include <algorithm>
#include <cmath>

#include "stagesplat/error.hpp"

namespace stagesplat {

void DensifyConfig::validate() const {
  if (!(start_iter < end_iter)) throw ValidationError("densify start must precede end");
  if (interval <= 0) throw ValidationError("densify interval must be positive");
}

bool DensifyConfig::is_refinement_iteration(long iter) const {
  return enabled && iter >= start_iter && iter <= end_iter && iter % interval == 0;
}

void DensifyStats::reset(std::size_t n) {
  grad_sum.assign(n, 0.0);
  count.assign(n, 0);
}

void DensifyStats::accumulate(const CloudGradients& g, double scale) {
  if (grad_sum.size() != g.mean_2d_norm.size()) reset(g.mean_2d_norm.size());
  for (std::size_t i = 0; i < grad_sum.size(); ++i) {
    if (g.mean_2d_norm[i] == 0.0) continue;
    grad_sum[i] += g.mean_2d_norm[i] * scale;
    ++count[i];
  }
}

namespace {

Eigen::Matrix3d rotation_matrix(const Quat4& q) {
  const Eigen::Vector4d u = q / q.norm();
  const double w = u[0], x = u[1], y = u[2], z = u[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),  //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

}  // namespace

DensifyReport densify_and_prune(GaussianCloud& cloud, const DensifyStats& stats, const DensifyConfig& config,
                                double scene_extent, Rng& rng) {
  cloud.check_invariants();
  const std::size_t n = cloud.size();
  const double split_threshold = config.split_scale_fraction * scene_extent;
  enum class Action { Keep, Prune, Clone, Split };
  std::vector<Action> action(n, Action::Keep);
  std::size_t growth = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sigmoid(cloud.opacity_logits[i]) < config.opacity_prune_threshold) {
      action[i] = Action::Prune;
    } else if (i < stats.grad_sum.size() && stats.mean(i) > config.grad_threshold) {
      action[i] = cloud.log_scales[i].maxCoeff() > std::log(split_threshold) ? Action::Split : Action::Clone;
      ++growth;
    }
  }
  DensifyReport report;
  if (n + growth > config.max_gaussians) {
    report.prune_only = true;
    for (auto& a : action)
      if (a == Action::Clone || a == Action::Split) a = Action::Keep;
  }

  GaussianCloud out;
  out.translations = cloud.translations;
  auto emit = [&](std::size_t src, const Vec3& mean, const Vec3& log_scale, long state_source) {
    out.means.push_back(mean);
    out.log_scales.push_back(log_scale);
    out.rotations.push_back(cloud.rotations[src]);
    out.opacity_logits.push_back(cloud.opacity_logits[src]);
    out.colors.push_back(cloud.colors[src]);
    report.source.push_back(state_source);
  };
  for (const auto& part : cloud.partitions) {
    const std::size_t begin = out.size();
    std::vector<std::pair<std::size_t, std::pair<Vec3, Vec3>>> appended;
    for (std::size_t i = part.begin; i < part.end; ++i) {
      switch (action[i]) {
        case Action::Prune: ++report.pruned; break;
        case Action::Keep: emit(i, cloud.means[i], cloud.log_scales[i], static_cast<long>(i)); break;
        case Action::Clone:
          emit(i, cloud.means[i], cloud.log_scales[i], static_cast<long>(i));
          appended.push_back({i, {cloud.means[i], cloud.log_scales[i]}});
          ++report.cloned;
          break;
        case Action::Split: {
          const Eigen::Matrix3d r = rotation_matrix(cloud.rotations[i]);
          const Vec3 s = cloud.log_scales[i].array().exp();
          const Vec3 shrunk = cloud.log_scales[i].array() - std::log(config.split_shrink);
          Vec3 offsets[2];
          for (auto& off : offsets) {
            const Vec3 z(rng.normal(), rng.normal(), rng.normal());
            off = r * s.cwiseProduct(z);
          }
          emit(i, cloud.means[i] + offsets[0], shrunk, -1);
          appended.push_back({i, {cloud.means[i] + offsets[1], shrunk}});
          ++report.split;
          break;
        }
      }
    }
    for (const auto& [src, ms] : appended) emit(src, ms.first, ms.second, -1);
    out.partitions.push_back({part.id, begin, out.size()});
  }
  cloud = std::move(out);
  cloud.check_invariants();
  return report;
}

}  // namespace stagesplat
