#pragma once

#include "topogs/core.hpp"
#include "topogs/graph.hpp"

#include <cstdint>
#include <vector>

namespace topogs {

// Per-point rigidity and covariance targets. Both are constants with respect
// to the loss gradients.
struct TargetCache {
  MatrixX3d v_ideal;               // (N*k) x 3; rows i*k .. i*k+k-1 belong to point i
  std::vector<Matrix3d> c_target;  // one per point
  bool frozen = false;
  int last_update_step = 0;

  Index size() const { return static_cast<Index>(c_target.size()); }
  auto v_ideal_block(Index i, Index k) const { return v_ideal.middleRows(i * k, k); }
};

// k x 3 matrix whose row r is mu_{neighbors(i, r)} - mu_i.
MatrixX3d spatial_edges(const MatrixX3d& means, const NeighborGraph& g, Index i);

struct ProcrustesResult {
  MatrixXd map;        // 3 x n, map * map^T = I when n >= 3
  MatrixX3d v_ideal;   // E * map^T
};

// Orthogonal Procrustes alignment of the high-dimensional edges onto the
// spatial edges: SVD of V^T E = U S W^T, map = U W^T (singular values are
// discarded). Singular vector pairs are sign-normalized so the first
// non-negligible entry of each U column is positive.
ProcrustesResult procrustes_target(const MatrixX3d& spatial, const MatrixXd& high, bool kabsch_correction = false);

// sum_j w_j v_j v_j^T over rows of `spatial` (surface) or `ideal` (trajectory).
Matrix3d covariance_target(Regime regime, const MatrixX3d& spatial, const MatrixX3d& ideal, const VectorXd& weights);

// Lazy schedule: step % tau == 0 and step <= freeze epoch.
bool should_update_targets(int step, const FitConfig& cfg);

// Recomputes v_ideal for every point from the current means. No-op when frozen.
void update_rigidity_targets(TargetCache& cache, const Dataset& data, const NeighborGraph& g,
                             const MatrixX3d& means, const FitConfig& cfg, int step);

// Recomputes every c_target; surface targets read the current means,
// trajectory targets read v_ideal.
void update_covariance_targets(TargetCache& cache, Regime regime, const NeighborGraph& g, const MatrixX3d& means);

// FNV-1a over the raw bytes of v_ideal.
std::uint64_t v_ideal_checksum(const TargetCache& cache);

}  // namespace topogs
