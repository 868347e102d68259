#include "stagesplat/adam.hpp"

#include <algorithm>
#include <cmath>

namespace stagesplat {

void adam_scalar_update(double& param, double grad, double& m, double& v, long step, double lr, const AdamHyper& h) {
  m = h.beta1 * m + (1.0 - h.beta1) * grad;
  v = h.beta2 * v + (1.0 - h.beta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(h.beta1, static_cast<double>(step)));
  const double v_hat = v / (1.0 - std::pow(h.beta2, static_cast<double>(step)));
  param -= lr * m_hat / (std::sqrt(v_hat) + h.eps);
}

double LearningRates::mean_at(long iter, long total_iters) const {
  const double f = total_iters <= 0 ? 1.0 : std::clamp(static_cast<double>(iter) / total_iters, 0.0, 1.0);
  return mean_extent_scale * std::exp(std::log(mean_init) * (1.0 - f) + std::log(mean_final) * f);
}

AdamState::AdamState(const GaussianCloud& cloud) {
  std::vector<long> identity(cloud.size());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = -1;
  remap(identity, cloud.object_count());
}

namespace {

template <typename V>
void update_vec(V& param, const V& grad, V& m, V& v, long step, double lr, const AdamHyper& h) {
  for (int k = 0; k < param.size(); ++k) adam_scalar_update(param[k], grad[k], m[k], v[k], step, lr, h);
}

template <typename T>
std::vector<T> gather(const std::vector<T>& src, std::span<const long> source, const T& zero) {
  std::vector<T> out(source.size(), zero);
  for (std::size_t i = 0; i < source.size(); ++i)
    if (source[i] >= 0) out[i] = src.at(static_cast<std::size_t>(source[i]));
  return out;
}

}  // namespace

void AdamState::step_gaussians(GaussianCloud& cloud, const CloudGradients& grads, std::span<const std::size_t> objects,
                               double mean_lr, const LearningRates& lr) {
  for (std::size_t o : objects) {
    const long step = ++steps_.at(o);
    const auto& p = cloud.partitions.at(o);
    for (std::size_t i = p.begin; i < p.end; ++i) {
      update_vec(cloud.means[i], grads.means[i], m_means_[i], v_means_[i], step, mean_lr, hyper);
      update_vec(cloud.log_scales[i], grads.log_scales[i], m_scales_[i], v_scales_[i], step, lr.scale, hyper);
      update_vec(cloud.rotations[i], grads.rotations[i], m_rot_[i], v_rot_[i], step, lr.rotation, hyper);
      adam_scalar_update(cloud.opacity_logits[i], grads.opacity_logits[i], m_opacity_[i], v_opacity_[i], step,
                         lr.opacity, hyper);
      update_vec(cloud.colors[i], grads.colors[i], m_colors_[i], v_colors_[i], step, lr.color, hyper);
      const double n = cloud.rotations[i].norm();
      if (n > 0) cloud.rotations[i] /= n;
    }
  }
}

void AdamState::step_translations(GaussianCloud& cloud, const CloudGradients& grads,
                                  std::span<const std::size_t> objects, double lr) {
  for (std::size_t o : objects) {
    const long step = ++translation_steps_.at(o);
    update_vec(cloud.translations[o], grads.translations[o], m_trans_[o], v_trans_[o], step, lr, hyper);
  }
}

void AdamState::remap(std::span<const long> source, std::size_t object_count) {
  const Eigen::Vector3d z3 = Eigen::Vector3d::Zero();
  const Eigen::Vector4d z4 = Eigen::Vector4d::Zero();
  m_means_ = gather(m_means_, source, z3);
  v_means_ = gather(v_means_, source, z3);
  m_scales_ = gather(m_scales_, source, z3);
  v_scales_ = gather(v_scales_, source, z3);
  m_colors_ = gather(m_colors_, source, z3);
  v_colors_ = gather(v_colors_, source, z3);
  m_rot_ = gather(m_rot_, source, z4);
  v_rot_ = gather(v_rot_, source, z4);
  m_opacity_ = gather(m_opacity_, source, 0.0);
  v_opacity_ = gather(v_opacity_, source, 0.0);
  if (steps_.size() != object_count) {
    steps_.assign(object_count, 0);
    translation_steps_.assign(object_count, 0);
    m_trans_.assign(object_count, z3);
    v_trans_.assign(object_count, z3);
  }
}

bool AdamState::aligned_with(std::size_t n, std::size_t objects) const {
  return m_means_.size() == n && v_means_.size() == n && m_scales_.size() == n && v_scales_.size() == n &&
         m_colors_.size() == n && v_colors_.size() == n && m_rot_.size() == n && v_rot_.size() == n &&
         m_opacity_.size() == n && v_opacity_.size() == n && steps_.size() == objects &&
         m_trans_.size() == objects && v_trans_.size() == objects;
}

}  // namespace stagesplat
