#include "topogs/geometry.hpp"

#include "topogs/errors.hpp"
#include "topogs/parallel.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstring>

namespace topogs {

MatrixX3d spatial_edges(const MatrixX3d& means, const NeighborGraph& g, Index i) {
  MatrixX3d v(g.k(), 3);
  for (Index r = 0; r < g.k(); ++r) v.row(r) = means.row(g.neighbors(i, r)) - means.row(i);
  return v;
}

ProcrustesResult procrustes_target(const MatrixX3d& spatial, const MatrixXd& high, bool kabsch_correction) {
  if (spatial.rows() != high.rows()) throw PreconditionError("spatial and high-dimensional edge counts differ");
  if (!spatial.allFinite() || !high.allFinite()) throw NumericalError("non-finite input to procrustes_target");

  const MatrixXd cross = spatial.transpose() * high;  // 3 x n
  Eigen::JacobiSVD<MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
  MatrixXd u = svd.matrixU();
  MatrixXd w = svd.matrixV();

  for (Index c = 0; c < u.cols(); ++c) {
    const double tol = 1e-12 * u.col(c).cwiseAbs().maxCoeff();
    for (Index r = 0; r < u.rows(); ++r) {
      if (std::abs(u(r, c)) <= tol) continue;
      if (u(r, c) < 0) {
        u.col(c) *= -1.0;
        w.col(c) *= -1.0;
      }
      break;
    }
  }

  ProcrustesResult out;
  out.map = u * w.transpose();
  if (kabsch_correction && out.map.cols() == 3 && out.map.determinant() < 0) {
    u.col(2) *= -1.0;
    out.map = u * w.transpose();
  }
  out.v_ideal = high * out.map.transpose();
  return out;
}

Matrix3d covariance_target(Regime regime, const MatrixX3d& spatial, const MatrixX3d& ideal, const VectorXd& weights) {
  const MatrixX3d& edges = regime == Regime::Surface2D ? spatial : ideal;
  Matrix3d c = Matrix3d::Zero();
  for (Index j = 0; j < edges.rows(); ++j) {
    const Vector3d v = edges.row(j).transpose();
    c.noalias() += weights[j] * (v * v.transpose());
  }
  return c;
}

bool should_update_targets(int step, const FitConfig& cfg) {
  return step % cfg.lazy_interval == 0 && step <= cfg.resolved_freeze_epoch();
}

void update_rigidity_targets(TargetCache& cache, const Dataset& data, const NeighborGraph& g,
                             const MatrixX3d& means, const FitConfig& cfg, int step) {
  if (cache.frozen) return;
  const Index n = g.size(), k = g.k();
  cache.v_ideal.resize(n * k, 3);
  parallel_for(n, [&](std::ptrdiff_t i) {
    const auto result = procrustes_target(spatial_edges(means, g, i), high_dim_edges(data, g, i), cfg.kabsch_correction);
    cache.v_ideal.middleRows(i * k, k) = result.v_ideal;
  });
  cache.last_update_step = step;
}

void update_covariance_targets(TargetCache& cache, Regime regime, const NeighborGraph& g, const MatrixX3d& means) {
  const Index n = g.size(), k = g.k();
  cache.c_target.resize(static_cast<std::size_t>(n));
  parallel_for(n, [&](std::ptrdiff_t i) {
    const VectorXd w = g.weights.row(i).transpose();
    if (regime == Regime::Surface2D) {
      cache.c_target[static_cast<std::size_t>(i)] = covariance_target(regime, spatial_edges(means, g, i), MatrixX3d(), w);
    } else {
      cache.c_target[static_cast<std::size_t>(i)] =
          covariance_target(regime, MatrixX3d(), cache.v_ideal.middleRows(i * k, k), w);
    }
  });
}

std::uint64_t v_ideal_checksum(const TargetCache& cache) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(cache.v_ideal.data());
  const std::size_t len = static_cast<std::size_t>(cache.v_ideal.size()) * sizeof(double);
  for (std::size_t b = 0; b < len; ++b) {
    h ^= bytes[b];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace topogs
