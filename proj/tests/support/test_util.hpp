#pragma once

// Shared generators and independent oracles for the test suites. Nothing in
// here calls into the library code paths it is used to check.

#include "topogs/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace topogs::testing {

inline MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

inline Quaternion random_unit_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Quaternion q(nd(rng), nd(rng), nd(rng), nd(rng));
  return q / q.norm();
}

// n x 3 matrix with orthonormal columns.
inline MatrixXd random_column_orthonormal(Index n, std::mt19937_64& rng) {
  const MatrixXd g = random_matrix(n, 3, rng);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  return qr.householderQ() * MatrixXd::Identity(n, 3);
}

inline Matrix3d random_rotation(std::mt19937_64& rng) {
  Matrix3d q = random_matrix(3, 3, rng);
  Eigen::HouseholderQR<Matrix3d> qr(q);
  Matrix3d r = qr.householderQ();
  if (r.determinant() < 0) r.col(0) *= -1.0;
  return r;
}

// ---- metric oracles: O(N^3) rank counting and a direct pair loop ----

inline double dist(const MatrixXd& x, Index i, Index j) {
  double s = 0.0;
  for (Index c = 0; c < x.cols(); ++c) {
    const double d = x(i, c) - x(j, c);
    s += d * d;
  }
  return s;
}

// 1-based rank of j among all m != i ordered by (distance, index).
inline Index brute_rank(const MatrixXd& x, Index i, Index j) {
  Index r = 1;
  const double dij = dist(x, i, j);
  for (Index m = 0; m < x.rows(); ++m) {
    if (m == i || m == j) continue;
    const double dim = dist(x, i, m);
    if (dim < dij || (dim == dij && m < j)) ++r;
  }
  return r;
}

inline double brute_rank_metric(const MatrixXd& reference, const MatrixXd& query, int k) {
  const Index n = reference.rows();
  std::int64_t penalty = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (brute_rank(query, i, j) <= k) {
        const Index r = brute_rank(reference, i, j);
        if (r > k) penalty += r - k;
      }
    }
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * static_cast<double>(penalty);
}

inline double brute_trustworthiness(const MatrixXd& high, const MatrixXd& low, int k) {
  return brute_rank_metric(high, low, k);
}
inline double brute_continuity(const MatrixXd& high, const MatrixXd& low, int k) {
  return brute_rank_metric(low, high, k);
}

inline double brute_stress(const MatrixXd& high, const MatrixXd& low, bool optimal = true) {
  std::vector<double> delta, d;
  for (Index i = 0; i < high.rows(); ++i)
    for (Index j = i + 1; j < high.rows(); ++j) {
      delta.push_back(std::sqrt(dist(high, i, j)));
      d.push_back(std::sqrt(dist(low, i, j)));
    }
  double num_a = 0, den_a = 0, den = 0;
  for (std::size_t p = 0; p < d.size(); ++p) {
    num_a += d[p] * delta[p];
    den_a += d[p] * d[p];
    den += delta[p] * delta[p];
  }
  const double alpha = optimal ? (den_a > 0 ? num_a / den_a : 0.0) : 1.0;
  double num = 0;
  for (std::size_t p = 0; p < d.size(); ++p) num += (alpha * d[p] - delta[p]) * (alpha * d[p] - delta[p]);
  return std::sqrt(num / den);
}

// ---- filesystem helpers ----

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("topogs_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace topogs::testing
