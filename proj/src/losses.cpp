#include "topogs/losses.hpp"

#include "topogs/errors.hpp"
#include "topogs/parallel.hpp"

#include <array>
#include <cmath>

namespace topogs {
namespace {

// dR/dq_k for the rotation matrix of q = (w, x, y, z), evaluated without
// normalization.
std::array<Matrix3d, 4> rotation_partials(const Quaternion& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Matrix3d, 4> d;
  d[0] << 0, -2 * z, 2 * y,
          2 * z, 0, -2 * x,
          -2 * y, 2 * x, 0;
  d[1] << 0, 2 * y, 2 * z,
          2 * y, -4 * x, -2 * w,
          2 * z, 2 * w, -4 * x;
  d[2] << -4 * y, 2 * x, 2 * w,
          2 * x, 0, 2 * z,
          -2 * w, 2 * z, -4 * y;
  d[3] << -4 * z, -2 * w, 2 * x,
          2 * w, -4 * z, 2 * y,
          2 * x, 2 * y, 0;
  return d;
}

// Pulls a gradient with respect to q/|q| back to q.
Quaternion through_normalization(const Quaternion& q, const Quaternion& grad_unit) {
  const double n = q.norm();
  const Quaternion u = q / n;
  return (grad_unit - u * u.dot(grad_unit)) / n;
}

double ordered_sum(const VectorXd& v) {
  double s = 0.0;
  for (Index i = 0; i < v.size(); ++i) s += v[i];
  return s;
}

}  // namespace

GaussianGradient GaussianGradient::zeros(Index n) {
  return {MatrixX3d::Zero(n, 3), MatrixX3d::Zero(n, 3), MatrixX4d::Zero(n, 4)};
}

double GaussianGradient::norm() const {
  return std::sqrt(means.squaredNorm() + log_scales.squaredNorm() + quaternions.squaredNorm());
}

double huber(const Eigen::Ref<const MatrixXd>& residuals, double beta) {
  if (!(beta > 0)) throw PreconditionError("huber beta must be > 0");
  double total = 0.0;
  for (Index c = 0; c < residuals.cols(); ++c)
    for (Index r = 0; r < residuals.rows(); ++r) {
      const double a = std::abs(residuals(r, c));
      total += a <= beta ? 0.5 * a * a : beta * (a - 0.5 * beta);
    }
  return total;
}

MeansLoss rigidity_loss(Regime regime, const MatrixX3d& means, const TargetCache& cache, const NeighborGraph& g,
                        double beta, bool normalize) {
  const Index n = g.size(), k = g.k();
  if (cache.v_ideal.rows() != n * k) throw PreconditionError("rigidity targets are not populated");
  if (regime == Regime::Trajectory1D && !(beta > 0)) throw PreconditionError("huber beta must be > 0");

  const double scale = normalize ? 1.0 / static_cast<double>(n) : 1.0;
  VectorXd per_point(n);
  MatrixX3d edge_grad(n * k, 3);  // dL/d(mu_j - mu_i) per edge

  parallel_for(n, [&](std::ptrdiff_t i) {
    const MatrixX3d residual = spatial_edges(means, g, i) - cache.v_ideal.middleRows(i * k, k);
    if (regime == Regime::Surface2D) {
      per_point[i] = residual.squaredNorm();
      edge_grad.middleRows(i * k, k) = 2.0 * scale * residual;
    } else {
      per_point[i] = huber(residual, beta);
      edge_grad.middleRows(i * k, k) = scale * residual.cwiseMax(-beta).cwiseMin(beta);
    }
  });

  MeansLoss out;
  out.value = scale * ordered_sum(per_point);
  out.grad = MatrixX3d::Zero(n, 3);
  for (Index i = 0; i < n; ++i)
    for (Index r = 0; r < k; ++r) {
      const auto ge = edge_grad.row(i * k + r);
      out.grad.row(g.neighbors(i, r)) += ge;
      out.grad.row(i) -= ge;
    }
  return out;
}

ShapeLoss covariance_loss(const GaussianSet& gaussians, const TargetCache& cache) {
  const Index n = gaussians.size();
  if (cache.size() != n) throw PreconditionError("covariance targets are not populated");
  const double inv_n = 1.0 / static_cast<double>(n);

  ShapeLoss out;
  out.grad_log_scales.resize(n, 3);
  out.grad_quaternions.resize(n, 4);
  VectorXd per_point(n);

  parallel_for(n, [&](std::ptrdiff_t i) {
    const Quaternion q = gaussians.quaternions.row(i).transpose();
    const Quaternion u = q / q.norm();
    const Matrix3d rot = detail::rotation_unchecked(u);
    const Vector3d var = (2.0 * gaussians.log_scales.row(i).transpose()).array().exp();
    const Matrix3d sigma = rot * var.asDiagonal() * rot.transpose();
    const Matrix3d diff = sigma - cache.c_target[static_cast<std::size_t>(i)];
    per_point[i] = diff.squaredNorm();

    const Matrix3d g_sigma = 2.0 * inv_n * diff;  // symmetric
    for (int j = 0; j < 3; ++j)
      out.grad_log_scales(i, j) = 2.0 * var[j] * rot.col(j).dot(g_sigma * rot.col(j));

    const Matrix3d g_rot = 2.0 * g_sigma * rot * var.asDiagonal();
    const auto partials = rotation_partials(u);
    Quaternion g_unit;
    for (int c = 0; c < 4; ++c) g_unit[c] = g_rot.cwiseProduct(partials[static_cast<std::size_t>(c)]).sum();
    out.grad_quaternions.row(i) = through_normalization(q, g_unit).transpose();
  });

  out.value = inv_n * ordered_sum(per_point);
  return out;
}

RotationLoss orientation_loss(const GaussianSet& gaussians, const NeighborGraph& g) {
  const Index n = g.size(), k = g.k();
  MatrixX4d unit(n, 4);
  for (Index i = 0; i < n; ++i) unit.row(i) = gaussians.quaternions.row(i).normalized();

  const double coeff = 1.0 / (static_cast<double>(n) * static_cast<double>(k));
  VectorXd per_point(n);
  MatrixXd dots(n, k);
  parallel_for(n, [&](std::ptrdiff_t i) {
    double acc = 0.0;
    for (Index r = 0; r < k; ++r) {
      const double d = unit.row(i).dot(unit.row(g.neighbors(i, r)));
      dots(i, r) = d;
      acc += 1.0 - d * d;
    }
    per_point[i] = acc;
  });

  MatrixX4d grad_unit = MatrixX4d::Zero(n, 4);
  for (Index i = 0; i < n; ++i)
    for (Index r = 0; r < k; ++r) {
      const Index j = g.neighbors(i, r);
      const double f = -2.0 * coeff * dots(i, r);
      grad_unit.row(i) += f * unit.row(j);
      grad_unit.row(j) += f * unit.row(i);
    }

  RotationLoss out;
  out.value = coeff * ordered_sum(per_point);
  out.grad.resize(n, 4);
  for (Index i = 0; i < n; ++i)
    out.grad.row(i) = through_normalization(gaussians.quaternions.row(i).transpose(), grad_unit.row(i).transpose()).transpose();
  return out;
}

TotalLoss total_loss(const FitConfig& cfg, const GaussianSet& state, const TargetCache& cache, const NeighborGraph& g) {
  const auto rigid = rigidity_loss(cfg.regime, state.means, cache, g, cfg.huber_beta, cfg.normalize_rigidity);
  const auto shape = covariance_loss(state, cache);
  const auto rot = orientation_loss(state, g);

  TotalLoss out;
  auto& rep = out.report;
  rep.l_r = rigid.value;
  rep.l_c = shape.value;
  rep.l_o = rot.value;
  rep.l_total = cfg.lambda_r * rep.l_r + cfg.lambda_c * rep.l_c + cfg.lambda_o * rep.l_o;
  rep.grad_norm_r = rigid.grad.norm();
  rep.grad_norm_c = std::sqrt(shape.grad_log_scales.squaredNorm() + shape.grad_quaternions.squaredNorm());
  rep.grad_norm_o = rot.grad.norm();

  out.grad.means = cfg.lambda_r * rigid.grad;
  out.grad.log_scales = cfg.lambda_c * shape.grad_log_scales;
  out.grad.quaternions = cfg.lambda_c * shape.grad_quaternions + cfg.lambda_o * rot.grad;
  return out;
}

}  // namespace topogs
