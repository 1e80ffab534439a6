#include "topogs/core.hpp"

#include "topogs/errors.hpp"

#include <cmath>
#include <string>

namespace topogs {

std::string_view to_string(Regime r) {
  return r == Regime::Trajectory1D ? "trajectory" : "surface";
}

Regime parse_regime(std::string_view text) {
  if (text == "trajectory" || text == "trajectory1d" || text == "1d") return Regime::Trajectory1D;
  if (text == "surface" || text == "surface2d" || text == "2d") return Regime::Surface2D;
  throw UsageError("unknown regime '" + std::string(text) + "' (expected surface or trajectory)");
}

double regime_scale_clamp(Regime r) { return r == Regime::Surface2D ? -0.5 : 1.0; }

void Dataset::validate() const {
  if (points.rows() < 1 || points.cols() < 1) throw DataError("dataset is empty");
  if (!points.allFinite()) throw DataError("dataset contains non-finite values");
  if (energy && energy->size() != points.rows())
    throw DataError("energy has length " + std::to_string(energy->size()) + ", expected " +
                    std::to_string(points.rows()));
  if (labels && labels->size() != points.rows())
    throw DataError("labels have length " + std::to_string(labels->size()) + ", expected " +
                    std::to_string(points.rows()));
}

void FitConfig::validate() const {
  auto fail = [](const std::string& msg) { throw UsageError("invalid config: " + msg); };
  if (k < 2) fail("k must be >= 2");
  if (epochs < 0) fail("epochs must be >= 0");
  if (lazy_interval < 1) fail("lazy interval must be >= 1");
  if (resolved_freeze_epoch() < 0 || resolved_freeze_epoch() > epochs)
    fail("freeze epoch must lie in [0, epochs]");
  if (lambda_r < 0 || lambda_c < 0 || lambda_o < 0) fail("loss weights must be >= 0");
  if (!(huber_beta > 0)) fail("huber beta must be > 0");
  if (!kernel_sigma.adaptive && !(kernel_sigma.value > 0)) fail("fixed kernel sigma must be > 0");
  if (!(lr_means >= 0 && lr_scales >= 0 && lr_quats >= 0)) fail("learning rates must be >= 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1))
    fail("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0)) fail("adam epsilon must be > 0");
  if (!std::isfinite(s_init)) fail("s_init must be finite");
  if (!(embedding_scale > 0) || !std::isfinite(embedding_scale)) fail("embedding scale must be > 0");
  if (init == InitStrategy::External && init_path.empty()) fail("external init requires a path");
}

Quaternion quat_normalize(const Quaternion& q) {
  const double n = q.norm();
  if (!(n > 0) || !std::isfinite(n)) throw PreconditionError("degenerate quaternion (zero or non-finite norm)");
  return q / n;
}

namespace detail {

Matrix3d rotation_unchecked(const Quaternion& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

}  // namespace detail

Matrix3d quat_to_rotation(const Quaternion& q) {
  if (std::abs(q.norm() - 1.0) > 1e-6) throw PreconditionError("quaternion is not unit norm");
  return detail::rotation_unchecked(q);
}

Matrix3d build_covariance(const Quaternion& q, const Vector3d& log_scales) {
  const Matrix3d r = quat_to_rotation(q);
  const Vector3d var = (2.0 * log_scales).array().exp();
  Matrix3d sigma = r * var.asDiagonal() * r.transpose();
  // exact symmetry regardless of rounding in the triple product
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace topogs
