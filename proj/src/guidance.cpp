#include "stagesplat/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stagesplat {

double NoiseSchedule::alpha_bar(double t) const {
  const double c = std::cos(0.5 * std::numbers::pi * t);
  return c * c;
}

double NoiseSchedule::weight(double t) const { return 1.0 - alpha_bar(t); }

double TimestepAnneal::t_max(long iter) const {
  const long k = iter - start_iter;
  if (k <= 0 || warmup_iters <= 0) return k <= 0 ? t_max_start : t_max_end;
  if (k >= warmup_iters) return t_max_end;
  const double f = static_cast<double>(k) / static_cast<double>(warmup_iters);
  return t_max_start + (t_max_end - t_max_start) * f;
}

double sample_timestep(Rng& rng, long iter, const TimestepAnneal& anneal) {
  const double hi = anneal.t_max(iter);
  return std::clamp(rng.uniform(anneal.t_min, hi), anneal.t_min, hi);
}

ScoreGrad sds_surrogate_grad(std::span<const double> z, std::span<const double> target, double t,
                             std::span<const double> noise, const NoiseSchedule& schedule) {
  if (z.size() != target.size() || z.size() != noise.size())
    throw std::invalid_argument("surrogate inputs differ in shape");
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("timestep must lie in (0, 1)");
  const double ab = schedule.alpha_bar(t);
  const double sa = std::sqrt(ab), sn = std::sqrt(1.0 - ab), w = schedule.weight(t);
  ScoreGrad out;
  out.grad_image.resize(z.size());
  double sq = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double z_t = sa * z[i] + sn * noise[i];
    const double eps_hat = (z_t - sa * target[i]) / sn;
    const double g = w * (eps_hat - noise[i]);
    out.grad_image[i] = g;
    sq += g * g;
  }
  out.scalar_loss = z.empty() ? 0.0 : sq / static_cast<double>(z.size() / 3);
  return out;
}

std::vector<double> sds_expected_grad(std::span<const double> z, std::span<const double> target, double t,
                                      const NoiseSchedule& schedule) {
  const double ab = schedule.alpha_bar(t);
  const double k = schedule.weight(t) * std::sqrt(ab) / std::sqrt(1.0 - ab);
  std::vector<double> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) g[i] = k * (z[i] - target[i]);
  return g;
}

std::vector<double> sample_noise(Rng& rng, std::size_t n) {
  std::vector<double> e(n);
  for (auto& v : e) v = rng.normal();
  return e;
}

ScoreGrad guidance_grad(std::span<const double> z, const GuidancePrompt& prompt, const ViewSample& view,
                        const Eigen::Vector3d& background, const TargetField& targets, const NoiseSchedule& schedule,
                        double t, std::span<const double> noise, const GuidanceParams& params) {
  const std::size_t n_obj = targets.spec().objects.size();
  if ((prompt.kind == PromptKind::Object && prompt.subject >= n_obj) ||
      (prompt.kind == PromptKind::Edge && prompt.subject >= targets.spec().edges.size()))
    throw std::out_of_range("guidance prompt does not resolve to a target");
  const Image positive = targets.target(prompt, view, background);
  ScoreGrad out = sds_surrogate_grad(z, positive, t, noise, schedule);
  for (double& g : out.grad_image) g *= params.gain;
  if (params.negative_weight == 0.0) return out;
  for (std::size_t neg : prompt.negative_objects) {
    if (neg >= n_obj) throw std::out_of_range("negative prompt does not resolve to an object");
    ViewSample v = view;
    v.look_at = targets.object_anchor(neg);
    const Image negative = targets.object_target(neg, v, background);
    const ScoreGrad rep = sds_surrogate_grad(z, negative, t, noise, schedule);
    for (std::size_t i = 0; i < out.grad_image.size(); ++i) out.grad_image[i] -= params.negative_weight * rep.grad_image[i];
  }
  return out;
}

}  // namespace stagesplat
