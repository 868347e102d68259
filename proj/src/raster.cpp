#include "stagesplat/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/LU>

#include "stagesplat/parallel.hpp"

namespace stagesplat {

using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::Vector4d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

namespace {

Matrix3d quat_to_matrix(const Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),  //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

// Gradient of <G, R(q)> with respect to the (already normalized) quaternion.
Vector4d quat_matrix_vjp(const Vector4d& q, const Matrix3d& g) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Vector4d d;
  d[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  d[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) + z * g(2, 0) + w * g(2, 1) -
              2 * x * g(2, 2));
  d[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) - w * g(2, 0) + z * g(2, 1) -
              2 * y * g(2, 2));
  d[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) + y * g(1, 2) +
              x * g(2, 0) + y * g(2, 1));
  return d;
}

struct Projected {
  Splat2D splat;
  Vector3d t_cam;
  Mat23 jac;
  Matrix3d rot;      // R(q)
  Vector3d scale;    // exp(log_scale)
  Vector4d q_unit;
  double q_norm = 1.0;
  Matrix3d sigma;    // world covariance
  Matrix2d cov2d;    // with low-pass floor
};

double support_power(const RasterSettings& s) {
  return s.cutoff_sigma > 0 ? -0.5 * s.cutoff_sigma * s.cutoff_sigma : -std::numeric_limits<double>::infinity();
}

std::vector<Projected> project_detailed(const GaussianCloud& cloud, std::span<const std::size_t> subset,
                                        const CameraPose& pose, const CameraIntrinsics& intr,
                                        const RasterSettings& settings) {
  std::vector<Projected> out;
  out.reserve(subset.size());
  std::vector<std::size_t> owner(cloud.size(), 0);
  for (std::size_t o = 0; o < cloud.partitions.size(); ++o)
    for (std::size_t i = cloud.partitions[o].begin; i < cloud.partitions[o].end; ++i) owner[i] = o;

  for (std::size_t idx : subset) {
    if (idx >= cloud.size()) throw std::out_of_range("subset index outside the cloud");
    Projected p;
    const Vector3d mean = cloud.means[idx] + cloud.translations[owner[idx]];
    p.t_cam = pose.to_camera(mean);
    const double tz = p.t_cam.z();
    if (!(tz > intr.near) || !(tz < intr.far)) continue;

    p.q_norm = cloud.rotations[idx].norm();
    p.q_unit = cloud.rotations[idx] / p.q_norm;
    p.rot = quat_to_matrix(p.q_unit);
    p.scale = cloud.log_scales[idx].array().exp();
    const Matrix3d m = p.rot * p.scale.asDiagonal();
    p.sigma = m * m.transpose();

    p.jac << pose.fx / tz, 0, -pose.fx * p.t_cam.x() / (tz * tz),  //
        0, pose.fy / tz, -pose.fy * p.t_cam.y() / (tz * tz);
    const Mat23 jw = p.jac * pose.rotation;
    p.cov2d = jw * p.sigma * jw.transpose();
    p.cov2d(0, 0) += kLowPass;
    p.cov2d(1, 1) += kLowPass;
    const double det = p.cov2d.determinant();
    if (!(det > 0)) continue;

    Splat2D& s = p.splat;
    s.mean_2d = Vector2d(pose.fx * p.t_cam.x() / tz + pose.cx, pose.fy * p.t_cam.y() / tz + pose.cy);
    s.conic = Vector3d(p.cov2d(1, 1) / det, -p.cov2d(0, 1) / det, p.cov2d(0, 0) / det);
    const double mid = 0.5 * (p.cov2d(0, 0) + p.cov2d(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.1, mid * mid - det));
    const double sd = std::sqrt(lambda_max);
    const double margin = 3.0 * sd;
    if (s.mean_2d.x() + margin < 0 || s.mean_2d.x() - margin > intr.width || s.mean_2d.y() + margin < 0 ||
        s.mean_2d.y() - margin > intr.height)
      continue;
    s.radius = settings.cutoff_sigma > 0 ? settings.cutoff_sigma * sd : std::numeric_limits<double>::infinity();
    s.depth = tz;
    s.color = cloud.colors[idx].unaryExpr([](double c) { return sigmoid(c); });
    s.alpha_max = sigmoid(cloud.opacity_logits[idx]);
    s.source_index = idx;
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const Projected& a, const Projected& b) {
    if (a.splat.depth != b.splat.depth) return a.splat.depth < b.splat.depth;
    return a.splat.source_index < b.splat.source_index;
  });
  return out;
}

struct TileGrid {
  int size, nx, ny;
  int count() const { return nx * ny; }
};

TileGrid make_grid(const CameraIntrinsics& intr, const RasterSettings& settings) {
  const int t = std::max(1, settings.tile_size);
  return {t, (intr.width + t - 1) / t, (intr.height + t - 1) / t};
}

std::vector<std::vector<std::uint32_t>> bin_splats(const std::vector<Splat2D>& splats, const TileGrid& g) {
  std::vector<std::vector<std::uint32_t>> lists(static_cast<std::size_t>(g.count()));
  for (std::size_t k = 0; k < splats.size(); ++k) {
    const auto& s = splats[k];
    int x0 = 0, x1 = g.nx - 1, y0 = 0, y1 = g.ny - 1;
    if (std::isfinite(s.radius)) {
      x0 = std::max(0, static_cast<int>(std::floor((s.mean_2d.x() - s.radius) / g.size)));
      x1 = std::min(g.nx - 1, static_cast<int>(std::floor((s.mean_2d.x() + s.radius) / g.size)));
      y0 = std::max(0, static_cast<int>(std::floor((s.mean_2d.y() - s.radius) / g.size)));
      y1 = std::min(g.ny - 1, static_cast<int>(std::floor((s.mean_2d.y() + s.radius) / g.size)));
    }
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx) lists[static_cast<std::size_t>(ty * g.nx + tx)].push_back(static_cast<std::uint32_t>(k));
  }
  return lists;
}

struct Hit {
  std::uint32_t local;  // position within the tile list
  double alpha;
  double gauss;
  double transmittance;  // before this splat
  bool clamped;
};

// Walks the sorted tile list for one pixel. Returns final transmittance and
// fills `hits` when non-null.
double composite_pixel(const std::vector<Splat2D>& splats, const std::vector<std::uint32_t>& list, double px,
                       double py, double cutoff_power, bool early, Vector3d& color, std::vector<Hit>* hits) {
  double t = 1.0;
  color.setZero();
  for (std::uint32_t l = 0; l < list.size(); ++l) {
    const Splat2D& s = splats[list[l]];
    const double dx = px - s.mean_2d.x(), dy = py - s.mean_2d.y();
    const double power = -0.5 * (s.conic[0] * dx * dx + 2 * s.conic[1] * dx * dy + s.conic[2] * dy * dy);
    if (power < cutoff_power) continue;
    const double g = std::exp(power);
    double a = s.alpha_max * g;
    bool clamped = false;
    if (a > kAlphaClamp) {
      a = kAlphaClamp;
      clamped = true;
    }
    if (a <= 0.0) continue;
    if (hits) hits->push_back({l, a, g, t, clamped});
    color += s.color * (a * t);
    t *= 1.0 - a;
    if (early && t < kMinTransmittance) break;
  }
  return t;
}

}  // namespace

std::vector<Splat2D> project(const GaussianCloud& cloud, std::span<const std::size_t> subset, const CameraPose& pose,
                             const CameraIntrinsics& intr, const RasterSettings& settings) {
  auto detailed = project_detailed(cloud, subset, pose, intr, settings);
  std::vector<Splat2D> out;
  out.reserve(detailed.size());
  for (auto& p : detailed) out.push_back(p.splat);
  return out;
}

RenderOutput composite(std::vector<Splat2D> splats, const CameraIntrinsics& intr, const Vector3d& background,
                       const RasterSettings& settings) {
  RenderOutput r;
  r.width = intr.width;
  r.height = intr.height;
  r.image.assign(static_cast<std::size_t>(r.width) * r.height * 3, 0.0);
  r.alpha.assign(static_cast<std::size_t>(r.width) * r.height, 0.0);
  r.splats = std::move(splats);
  const auto front_first = [](const Splat2D& a, const Splat2D& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.source_index < b.source_index;
  };
  if (!std::is_sorted(r.splats.begin(), r.splats.end(), front_first))
    std::sort(r.splats.begin(), r.splats.end(), front_first);
  const TileGrid grid = make_grid(intr, settings);
  r.tile_lists = bin_splats(r.splats, grid);
  const double cutoff = support_power(settings);

  parallel_for(static_cast<std::size_t>(grid.count()), [&](std::size_t tile) {
    const int tx = static_cast<int>(tile) % grid.nx, ty = static_cast<int>(tile) / grid.nx;
    const auto& list = r.tile_lists[tile];
    Vector3d c;
    for (int y = ty * grid.size; y < std::min(r.height, (ty + 1) * grid.size); ++y) {
      for (int x = tx * grid.size; x < std::min(r.width, (tx + 1) * grid.size); ++x) {
        const double t =
            composite_pixel(r.splats, list, x + 0.5, y + 0.5, cutoff, settings.early_termination, c, nullptr);
        const std::size_t p = static_cast<std::size_t>(y) * r.width + x;
        for (int k = 0; k < 3; ++k) r.image[p * 3 + k] = c[k] + t * background[k];
        r.alpha[p] = 1.0 - t;
      }
    }
  });
  return r;
}

std::vector<PixelContribution> pixel_contributions(const RenderOutput& r, int x, int y, const RasterSettings& settings) {
  if (x < 0 || y < 0 || x >= r.width || y >= r.height) throw std::out_of_range("pixel outside the image");
  CameraIntrinsics intr;
  intr.width = r.width;
  intr.height = r.height;
  const TileGrid grid = make_grid(intr, settings);
  const auto& list = r.tile_lists.at(static_cast<std::size_t>((y / grid.size) * grid.nx + x / grid.size));
  std::vector<Hit> hits;
  Vector3d c;
  composite_pixel(r.splats, list, x + 0.5, y + 0.5, support_power(settings), settings.early_termination, c, &hits);
  std::vector<PixelContribution> out;
  for (const Hit& h : hits) out.push_back({r.splats[list[h.local]].source_index, h.alpha, h.transmittance});
  return out;
}

RenderOutput render(const GaussianCloud& cloud, std::span<const std::size_t> objects, const ViewSample& view,
                    const CameraIntrinsics& intr, const Vector3d& background, const RasterSettings& settings) {
  const CameraPose pose = pose_from_view(view, intr);
  const auto subset = cloud.indices_of(objects);
  return composite(project(cloud, subset, pose, intr, settings), intr, background, settings);
}

CloudGradients::CloudGradients(std::size_t n, std::size_t objects) { resize(n, objects); }

void CloudGradients::resize(std::size_t n, std::size_t objects) {
  means.assign(n, Vector3d::Zero());
  log_scales.assign(n, Vector3d::Zero());
  rotations.assign(n, Vector4d::Zero());
  opacity_logits.assign(n, 0.0);
  colors.assign(n, Vector3d::Zero());
  mean_2d_norm.assign(n, 0.0);
  translations.assign(objects, Vector3d::Zero());
}

void CloudGradients::set_zero() { resize(means.size(), translations.size()); }

void CloudGradients::add_scaled(const CloudGradients& o, double w) {
  for (std::size_t i = 0; i < means.size(); ++i) {
    means[i] += w * o.means[i];
    log_scales[i] += w * o.log_scales[i];
    rotations[i] += w * o.rotations[i];
    opacity_logits[i] += w * o.opacity_logits[i];
    colors[i] += w * o.colors[i];
    mean_2d_norm[i] += std::abs(w) * o.mean_2d_norm[i];
  }
  for (std::size_t k = 0; k < translations.size(); ++k) translations[k] += w * o.translations[k];
}

void CloudGradients::restrict_to(const GaussianCloud& cloud, std::span<const std::size_t> objects) {
  for (std::size_t o = 0; o < cloud.partitions.size(); ++o) {
    if (std::find(objects.begin(), objects.end(), o) != objects.end()) continue;
    const auto& p = cloud.partitions[o];
    for (std::size_t i = p.begin; i < p.end; ++i) {
      means[i].setZero();
      log_scales[i].setZero();
      rotations[i].setZero();
      opacity_logits[i] = 0.0;
      colors[i].setZero();
      mean_2d_norm[i] = 0.0;
    }
    translations[o].setZero();
  }
}

double CloudGradients::squared_norm() const {
  double s = 0;
  for (std::size_t i = 0; i < means.size(); ++i)
    s += means[i].squaredNorm() + log_scales[i].squaredNorm() + rotations[i].squaredNorm() +
         opacity_logits[i] * opacity_logits[i] + colors[i].squaredNorm();
  for (const auto& t : translations) s += t.squaredNorm();
  return s;
}

namespace {

// Screen-space gradient of one splat.
struct SplatGrad {
  Vector2d mean = Vector2d::Zero();
  Vector3d conic = Vector3d::Zero();
  Vector3d color = Vector3d::Zero();
  double alpha_max = 0.0;
};

}  // namespace

CloudGradients backward(const GaussianCloud& cloud, std::span<const std::size_t> objects, const ViewSample& view,
                        const CameraIntrinsics& intr, const Vector3d& background, std::span<const double> grad_image,
                        const RasterSettings& settings) {
  const std::size_t pixels = static_cast<std::size_t>(intr.width) * intr.height;
  if (grad_image.size() != pixels * 3) throw std::invalid_argument("grad_image shape does not match intrinsics");
  const CameraPose pose = pose_from_view(view, intr);
  const auto subset = cloud.indices_of(objects);
  const auto proj = project_detailed(cloud, subset, pose, intr, settings);
  std::vector<Splat2D> splats;
  splats.reserve(proj.size());
  for (const auto& p : proj) splats.push_back(p.splat);

  const TileGrid grid = make_grid(intr, settings);
  const auto lists = bin_splats(splats, grid);
  const double cutoff = support_power(settings);

  // Per-tile partial gradients, reduced afterwards in tile order so the sum
  // is independent of the thread schedule.
  std::vector<std::vector<SplatGrad>> partial(lists.size());
  parallel_for(lists.size(), [&](std::size_t tile) {
    const auto& list = lists[tile];
    auto& acc = partial[tile];
    acc.assign(list.size(), SplatGrad{});
    if (list.empty()) return;
    const int tx = static_cast<int>(tile) % grid.nx, ty = static_cast<int>(tile) / grid.nx;
    std::vector<Hit> hits;
    Vector3d color;
    for (int y = ty * grid.size; y < std::min(intr.height, (ty + 1) * grid.size); ++y) {
      for (int x = tx * grid.size; x < std::min(intr.width, (tx + 1) * grid.size); ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * intr.width + x;
        const Vector3d g(grad_image[p * 3], grad_image[p * 3 + 1], grad_image[p * 3 + 2]);
        if (g.isZero(0.0)) continue;
        hits.clear();
        const double px = x + 0.5, py = y + 0.5;
        const double t_final =
            composite_pixel(splats, list, px, py, cutoff, settings.early_termination, color, &hits);
        Vector3d after = t_final * background;
        for (std::size_t h = hits.size(); h-- > 0;) {
          const Hit& hit = hits[h];
          const Splat2D& s = splats[list[hit.local]];
          SplatGrad& sg = acc[hit.local];
          sg.color += g * (hit.alpha * hit.transmittance);
          const double d_alpha = g.dot(s.color * hit.transmittance - after / (1.0 - hit.alpha));
          after += s.color * (hit.alpha * hit.transmittance);
          if (hit.clamped) continue;
          sg.alpha_max += d_alpha * hit.gauss;
          const double d_power = d_alpha * hit.alpha;
          const double dx = px - s.mean_2d.x(), dy = py - s.mean_2d.y();
          sg.conic += d_power * Vector3d(-0.5 * dx * dx, -dx * dy, -0.5 * dy * dy);
          sg.mean += d_power * Vector2d(s.conic[0] * dx + s.conic[1] * dy, s.conic[1] * dx + s.conic[2] * dy);
        }
      }
    }
  });

  std::vector<SplatGrad> total(splats.size());
  for (std::size_t tile = 0; tile < lists.size(); ++tile) {
    for (std::size_t l = 0; l < lists[tile].size(); ++l) {
      SplatGrad& dst = total[lists[tile][l]];
      const SplatGrad& src = partial[tile][l];
      dst.mean += src.mean;
      dst.conic += src.conic;
      dst.color += src.color;
      dst.alpha_max += src.alpha_max;
    }
  }

  CloudGradients grads(cloud.size(), cloud.object_count());
  const Matrix3d& w = pose.rotation;
  for (std::size_t k = 0; k < proj.size(); ++k) {
    const Projected& p = proj[k];
    const SplatGrad& sg = total[k];
    const std::size_t idx = p.splat.source_index;

    const Vector3d& col = p.splat.color;
    grads.colors[idx] = sg.color.cwiseProduct(col.cwiseProduct(Vector3d::Ones() - col));
    const double a = p.splat.alpha_max;
    grads.opacity_logits[idx] = sg.alpha_max * a * (1.0 - a);
    grads.mean_2d_norm[idx] = sg.mean.norm();

    // conic = cov2d^{-1}
    const Matrix2d q = p.cov2d.inverse();
    Matrix2d g_conic;
    g_conic << sg.conic[0], 0.5 * sg.conic[1], 0.5 * sg.conic[1], sg.conic[2];
    const Matrix2d g_cov2d = -q * g_conic * q;

    // cov2d = M sigma M^T + floor, M = J W
    const Mat23 m = p.jac * w;
    const Matrix3d g_sigma = m.transpose() * g_cov2d * m;
    const Mat23 g_m = 2.0 * g_cov2d * m * p.sigma;
    const Mat23 g_jac = g_m * w.transpose();

    const double tx = p.t_cam.x(), ty = p.t_cam.y(), tz = p.t_cam.z();
    const double fx = pose.fx, fy = pose.fy;
    Vector3d g_t;
    g_t.x() = sg.mean.x() * fx / tz + g_jac(0, 2) * (-fx / (tz * tz));
    g_t.y() = sg.mean.y() * fy / tz + g_jac(1, 2) * (-fy / (tz * tz));
    g_t.z() = -sg.mean.x() * fx * tx / (tz * tz) - sg.mean.y() * fy * ty / (tz * tz) +
              g_jac(0, 0) * (-fx / (tz * tz)) + g_jac(0, 2) * (2 * fx * tx / (tz * tz * tz)) +
              g_jac(1, 1) * (-fy / (tz * tz)) + g_jac(1, 2) * (2 * fy * ty / (tz * tz * tz));
    grads.means[idx] = w.transpose() * g_t;

    // sigma = (R S)(R S)^T
    const Matrix3d rs = p.rot * p.scale.asDiagonal();
    const Matrix3d g_rs = 2.0 * g_sigma * rs;
    Vector3d g_scale;
    for (int c = 0; c < 3; ++c) g_scale[c] = g_rs.col(c).dot(p.rot.col(c));
    grads.log_scales[idx] = g_scale.cwiseProduct(p.scale);
    const Matrix3d g_rot = g_rs * p.scale.asDiagonal();
    const Vector4d g_qn = quat_matrix_vjp(p.q_unit, g_rot);
    grads.rotations[idx] = (g_qn - p.q_unit * p.q_unit.dot(g_qn)) / p.q_norm;
  }

  for (std::size_t o = 0; o < cloud.partitions.size(); ++o) {
    Vector3d sum = Vector3d::Zero();
    for (std::size_t i = cloud.partitions[o].begin; i < cloud.partitions[o].end; ++i) sum += grads.means[i];
    grads.translations[o] = sum;
  }
  return grads;
}

}  // namespace stagesplat
