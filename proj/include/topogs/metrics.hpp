#pragma once

#include "topogs/core.hpp"
#include "topogs/graph.hpp"

#include <cstdint>

namespace topogs {

struct MetricsReport {
  double stress1 = 0.0;
  double trustworthiness = 1.0;
  double continuity = 1.0;
  int k = 0;
  std::int64_t n_pairs_used = 0;
};

enum class StressScaling { Optimal, Raw };

struct StressResult {
  double value = 0.0;
  std::int64_t n_pairs = 0;
};

// Kruskal Stress-1 over unordered pairs. Optimal scaling multiplies the
// embedding distances by alpha = sum(d delta) / sum(d^2) first. Up to
// kStressExactLimit points all pairs are used; above it a seeded sample of
// kStressSamplePairs pairs.
inline constexpr Index kStressExactLimit = 5000;
inline constexpr std::int64_t kStressSamplePairs = 2'000'000;

StressResult stress1(const MatrixXd& high, const MatrixXd& low, StressScaling scaling = StressScaling::Optimal,
                     std::uint64_t seed = 0);

// Rank-based neighbourhood preservation; requires 1 <= k < N/2. Ranks are
// 1-based with ties broken by point index.
double trustworthiness(const MatrixXd& high, const MatrixXd& low, int k);
double continuity(const MatrixXd& high, const MatrixXd& low, int k);

MetricsReport compute_metrics(const MatrixXd& high, const MatrixXd& low, int k,
                              StressScaling scaling = StressScaling::Optimal);

// Per-point exp(max s - min s) over the three log-scales; 1 is spherical.
VectorXd anisotropy_ratios(const MatrixX3d& log_scales);
double median(VectorXd values);

// Mean of (q_i . q_j)^2 over all graph edges, on normalized quaternions.
double mean_neighbor_alignment(const MatrixX4d& quaternions, const NeighborGraph& g);

}  // namespace topogs
