#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stagesplat/rng.hpp"
#include "stagesplat/targets.hpp"

namespace stagesplat {

/// Cosine schedule: alpha_bar(t) = cos^2(pi t / 2), weight w(t) = 1 - alpha_bar(t).
struct NoiseSchedule {
  double alpha_bar(double t) const;
  double weight(double t) const;
};

/// Timestep annealing: uniform in [t_min, t_max(iter)] where t_max falls
/// linearly from t_max_start to t_max_end over warmup_iters starting at
/// start_iter, then stays at t_max_end.
struct TimestepAnneal {
  double t_min = 0.02;
  double t_max_start = 0.98;
  double t_max_end = 0.5;
  long warmup_iters = 450;
  long start_iter = 0;

  double t_max(long iter) const;
};

double sample_timestep(Rng& rng, long iter, const TimestepAnneal& anneal);

struct ScoreGrad {
  std::vector<double> grad_image;
  double scalar_loss = 0.0;  // ||w(t)(eps_hat - eps)||^2 / (H W)
};

/// Surrogate denoiser eps_hat = (z_t - sqrt(ab) target) / sqrt(1 - ab) with
/// z_t = sqrt(ab) z + sqrt(1 - ab) eps; returns w(t) (eps_hat - eps).
ScoreGrad sds_surrogate_grad(std::span<const double> z, std::span<const double> target, double t,
                             std::span<const double> noise, const NoiseSchedule& schedule);

/// Closed form of the surrogate's expectation over eps.
std::vector<double> sds_expected_grad(std::span<const double> z, std::span<const double> target, double t,
                                      const NoiseSchedule& schedule);

std::vector<double> sample_noise(Rng& rng, std::size_t n);

struct GuidanceParams {
  double negative_weight = 0.1;  // beta
  double gain = 1.0;             // scale on the positive term
};

/// Guidance toward the prompt's target minus beta times the surrogate
/// gradient toward each negative object's target (the same view recentered
/// on that object). The scalar loss reports the positive term only.
ScoreGrad guidance_grad(std::span<const double> z, const GuidancePrompt& prompt, const ViewSample& view,
                        const Eigen::Vector3d& background, const TargetField& targets, const NoiseSchedule& schedule,
                        double t, std::span<const double> noise, const GuidanceParams& params = {});

}  // namespace stagesplat
