#pragma once

#include "topogs/core.hpp"
#include "topogs/geometry.hpp"
#include "topogs/graph.hpp"

namespace topogs {

struct LossReport {
  double l_r = 0.0;
  double l_c = 0.0;
  double l_o = 0.0;
  double l_total = 0.0;
  // Frobenius norms of each unweighted term's gradient over all parameters.
  double grad_norm_r = 0.0;
  double grad_norm_c = 0.0;
  double grad_norm_o = 0.0;
};

struct GaussianGradient {
  MatrixX3d means;
  MatrixX3d log_scales;
  MatrixX4d quaternions;

  static GaussianGradient zeros(Index n);
  double norm() const;
};

// Elementwise Huber sum: 0.5 x^2 for |x| <= beta, beta (|x| - 0.5 beta) otherwise.
double huber(const Eigen::Ref<const MatrixXd>& residuals, double beta);

struct MeansLoss {
  double value = 0.0;
  MatrixX3d grad;  // N x 3
};

// Surface: sum_i ||V_i - V_ideal_i||_F^2. Trajectory: sum_i H_beta(V_i - V_ideal_i).
// With `normalize` the sum is divided by N.
MeansLoss rigidity_loss(Regime regime, const MatrixX3d& means, const TargetCache& cache, const NeighborGraph& g,
                        double beta, bool normalize = false);

struct ShapeLoss {
  double value = 0.0;
  MatrixX3d grad_log_scales;
  MatrixX4d grad_quaternions;
};

// (1/N) sum_i ||Sigma_i - C_target_i||_F^2 with Sigma_i built from the
// normalized quaternion; targets are constants.
ShapeLoss covariance_loss(const GaussianSet& gaussians, const TargetCache& cache);

struct RotationLoss {
  double value = 0.0;
  MatrixX4d grad;
};

// (1/N) sum_i (1/k) sum_j (1 - (q_i . q_j)^2) on normalized quaternions.
RotationLoss orientation_loss(const GaussianSet& gaussians, const NeighborGraph& g);

struct TotalLoss {
  LossReport report;
  GaussianGradient grad;
};

TotalLoss total_loss(const FitConfig& cfg, const GaussianSet& state, const TargetCache& cache, const NeighborGraph& g);

}  // namespace topogs
