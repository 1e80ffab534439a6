#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace topogs {

using Index = Eigen::Index;
using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;
using Matrix3d = Eigen::Matrix3d;
using Vector3d = Eigen::Vector3d;
using MatrixX3d = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using MatrixX4d = Eigen::Matrix<double, Eigen::Dynamic, 4>;
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXi = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Quaternions are stored as 4-vectors in (w, x, y, z) order everywhere,
// including the rot_0..rot_3 properties of exported PLY files.
using Quaternion = Eigen::Vector4d;

enum class Regime { Trajectory1D, Surface2D };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view text);

// Upper clamp on training-phase log-scales for a regime.
double regime_scale_clamp(Regime r);
inline constexpr double kLogScaleFloor = -8.0;

struct AffineMap {
  Eigen::RowVectorXd offset;  // subtracted first
  double scale = 1.0;         // multiplied after centering
};

struct Dataset {
  MatrixXd points;  // N x n
  std::optional<VectorXd> energy;
  std::optional<Eigen::VectorXi> labels;
  std::string name;
  std::optional<AffineMap> standardization;

  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }

  // Throws DataError when shapes disagree or entries are non-finite.
  void validate() const;
};

struct GaussianSet {
  MatrixX3d means;
  MatrixX3d log_scales;
  MatrixX4d quaternions;  // rows (w, x, y, z)
  VectorXd opacities;     // derived at export time, never optimized

  Index size() const { return means.rows(); }
};

struct KernelSigma {
  bool adaptive = true;
  double value = 1.0;  // used only when !adaptive

  static KernelSigma fixed(double sigma) { return {false, sigma}; }
};

enum class InitStrategy { Pca3, External };

struct FitConfig {
  Regime regime = Regime::Surface2D;
  int k = 15;
  double lambda_r = 10.0;
  double lambda_c = 10.0;
  double lambda_o = 2.0;
  int epochs = 200;
  int lazy_interval = 15;
  std::optional<int> freeze_epoch;  // defaults to epochs / 2
  double huber_beta = 0.5;
  std::optional<double> scale_clamp_max;  // defaults to regime_scale_clamp(regime)
  double s_init = -2.0;
  // Embedding units per data unit. Rigidity targets use the data scaled by
  // this factor and the initial means are sized to match, so on standardized
  // input the embedding has mean row norm embedding_scale.
  double embedding_scale = 8.0;

  double lr_means = 5e-3;
  double lr_scales = 1e-2;
  double lr_quats = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  std::uint64_t seed = 0;
  KernelSigma kernel_sigma;

  // Divide the rigidity sum by N like the covariance and orientation terms.
  bool normalize_rigidity = false;
  // Flip one axis of the Procrustes map when it would be a reflection (n == 3 only).
  bool kabsch_correction = false;

  InitStrategy init = InitStrategy::Pca3;
  std::string init_path;

  int resolved_freeze_epoch() const { return freeze_epoch.value_or(epochs / 2); }
  double resolved_scale_clamp() const { return scale_clamp_max.value_or(regime_scale_clamp(regime)); }

  // Throws UsageError on any invariant violation.
  void validate() const;
};

Quaternion quat_normalize(const Quaternion& q);

// Requires |q| = 1 within 1e-6.
Matrix3d quat_to_rotation(const Quaternion& q);

// Sigma = R diag(exp(2 s)) R^T.
Matrix3d build_covariance(const Quaternion& q, const Vector3d& log_scales);

namespace detail {
// Rotation matrix of a unit quaternion without the norm check.
Matrix3d rotation_unchecked(const Quaternion& q);
}  // namespace detail

}  // namespace topogs
