#include "topogs/metrics.hpp"

#include "topogs/errors.hpp"
#include "topogs/parallel.hpp"
#include "topogs/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace topogs {
namespace {

void check_pair(const MatrixXd& high, const MatrixXd& low) {
  if (high.rows() != low.rows())
    throw DataError("row count mismatch: " + std::to_string(high.rows()) + " vs " + std::to_string(low.rows()));
  if (high.rows() < 2) throw PreconditionError("metrics need at least 2 points");
}

// Penalty sum for points that are k-neighbours in `query` space but not in
// `reference` space, weighted by (reference rank - k).
std::int64_t rank_penalty(const MatrixXd& reference, const MatrixXd& query, int k) {
  const Index n = reference.rows();
  if (k < 1 || 2 * static_cast<Index>(k) >= n)
    throw UsageError("rank metrics need 1 <= k < N/2 (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");

  std::vector<std::int64_t> per_point(static_cast<std::size_t>(n), 0);
  parallel_for(n, [&](std::ptrdiff_t i) {
    std::vector<std::pair<double, Index>> ref(static_cast<std::size_t>(n - 1)), qry(static_cast<std::size_t>(n - 1));
    std::size_t c = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      ref[c] = {(reference.row(j) - reference.row(i)).squaredNorm(), j};
      qry[c] = {(query.row(j) - query.row(i)).squaredNorm(), j};
      ++c;
    }
    std::sort(ref.begin(), ref.end());
    std::vector<Index> rank(static_cast<std::size_t>(n), 0);
    for (std::size_t r = 0; r < ref.size(); ++r) rank[static_cast<std::size_t>(ref[r].second)] = static_cast<Index>(r) + 1;

    std::partial_sort(qry.begin(), qry.begin() + k, qry.end());
    std::int64_t acc = 0;
    for (int r = 0; r < k; ++r) {
      const Index rr = rank[static_cast<std::size_t>(qry[static_cast<std::size_t>(r)].second)];
      if (rr > k) acc += rr - k;
    }
    per_point[static_cast<std::size_t>(i)] = acc;
  });
  return std::accumulate(per_point.begin(), per_point.end(), std::int64_t{0});
}

double rank_score(std::int64_t penalty, Index n, int k) {
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * static_cast<double>(penalty);
}

struct StressSums {
  double cross = 0.0, low_sq = 0.0, high_sq = 0.0;
};

}  // namespace

StressResult stress1(const MatrixXd& high, const MatrixXd& low, StressScaling scaling, std::uint64_t seed) {
  check_pair(high, low);
  const Index n = high.rows();

  // Pairs are grouped into rows; each row is reduced sequentially and rows
  // are combined in order, so the value does not depend on the thread count.
  std::vector<std::vector<std::pair<Index, Index>>> sampled;
  Index groups = n;
  std::int64_t n_pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;
  if (n > kStressExactLimit) {
    constexpr Index kGroupSize = 4096;
    Rng rng(seed);
    const auto un = static_cast<std::uint64_t>(n);
    groups = static_cast<Index>((kStressSamplePairs + kGroupSize - 1) / kGroupSize);
    sampled.resize(static_cast<std::size_t>(groups));
    std::int64_t drawn = 0;
    while (drawn < kStressSamplePairs) {
      const auto i = static_cast<Index>(rng.next() % un);
      const auto j = static_cast<Index>(rng.next() % un);
      if (i == j) continue;
      sampled[static_cast<std::size_t>(drawn / kGroupSize)].emplace_back(i, j);
      ++drawn;
    }
    n_pairs = kStressSamplePairs;
  }

  auto for_each_pair = [&](Index g, auto&& fn) {
    if (sampled.empty()) {
      for (Index j = g + 1; j < n; ++j) fn(g, j);
    } else {
      for (const auto& [i, j] : sampled[static_cast<std::size_t>(g)]) fn(i, j);
    }
  };

  std::vector<StressSums> partial(static_cast<std::size_t>(groups));
  parallel_for(groups, [&](std::ptrdiff_t g) {
    StressSums& s = partial[static_cast<std::size_t>(g)];
    for_each_pair(g, [&](Index i, Index j) {
      const double delta = (high.row(i) - high.row(j)).norm();
      const double d = (low.row(i) - low.row(j)).norm();
      s.cross += d * delta;
      s.low_sq += d * d;
      s.high_sq += delta * delta;
    });
  });
  StressSums s;
  for (const auto& p : partial) {
    s.cross += p.cross;
    s.low_sq += p.low_sq;
    s.high_sq += p.high_sq;
  }
  if (!(s.high_sq > 0)) throw DataError("stress undefined: all high-dimensional points coincide");

  double alpha = 1.0;
  if (scaling == StressScaling::Optimal) alpha = s.low_sq > 0 ? s.cross / s.low_sq : 0.0;

  std::vector<double> residual(static_cast<std::size_t>(groups), 0.0);
  parallel_for(groups, [&](std::ptrdiff_t g) {
    double acc = 0.0;
    for_each_pair(g, [&](Index i, Index j) {
      const double r = alpha * (low.row(i) - low.row(j)).norm() - (high.row(i) - high.row(j)).norm();
      acc += r * r;
    });
    residual[static_cast<std::size_t>(g)] = acc;
  });
  double num = 0.0;
  for (double r : residual) num += r;
  return {std::sqrt(num / s.high_sq), n_pairs};
}

double trustworthiness(const MatrixXd& high, const MatrixXd& low, int k) {
  check_pair(high, low);
  return rank_score(rank_penalty(high, low, k), high.rows(), k);
}

double continuity(const MatrixXd& high, const MatrixXd& low, int k) {
  check_pair(high, low);
  return rank_score(rank_penalty(low, high, k), high.rows(), k);
}

MetricsReport compute_metrics(const MatrixXd& high, const MatrixXd& low, int k, StressScaling scaling) {
  MetricsReport rep;
  const auto s = stress1(high, low, scaling);
  rep.stress1 = s.value;
  rep.n_pairs_used = s.n_pairs;
  rep.trustworthiness = trustworthiness(high, low, k);
  rep.continuity = continuity(high, low, k);
  rep.k = k;
  return rep;
}

VectorXd anisotropy_ratios(const MatrixX3d& log_scales) {
  return (log_scales.rowwise().maxCoeff() - log_scales.rowwise().minCoeff()).array().exp();
}

double median(VectorXd values) {
  if (values.size() == 0) throw PreconditionError("median of an empty vector");
  std::sort(values.begin(), values.end());
  const Index mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double mean_neighbor_alignment(const MatrixX4d& quaternions, const NeighborGraph& g) {
  if (quaternions.rows() != g.size()) throw PreconditionError("quaternion count does not match the graph");
  double total = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    const Eigen::RowVector4d qi = quaternions.row(i).normalized();
    for (Index r = 0; r < g.k(); ++r) {
      const double d = qi.dot(quaternions.row(g.neighbors(i, r)).normalized());
      total += d * d;
    }
  }
  return total / static_cast<double>(g.size() * g.k());
}

}  // namespace topogs
