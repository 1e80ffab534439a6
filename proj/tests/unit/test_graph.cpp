#include "topogs/errors.hpp"
#include "topogs/graph.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace topogs;
namespace tt = topogs::testing;

namespace {

Dataset from(const MatrixXd& m) {
  Dataset d;
  d.points = m;
  return d;
}

}  // namespace

TEST_CASE("build_knn on a line breaks ties toward the smaller index") {
  MatrixXd x(4, 1);
  x << 0, 1, 2, 10;
  const NeighborGraph g = build_knn(x, 1);
  CHECK(g.neighbors(0, 0) == 1);
  CHECK(g.neighbors(1, 0) == 0);
  CHECK(g.neighbors(2, 0) == 1);
  CHECK(g.neighbors(3, 0) == 2);
  CHECK(g.distances(3, 0) == 8.0);
}

TEST_CASE("build_knn on a unit square") {
  MatrixXd x(4, 2);
  x << 0, 0, 1, 0, 1, 1, 0, 1;
  const NeighborGraph g = build_knn(x, 2);
  const int expected[4][2] = {{1, 3}, {0, 2}, {1, 3}, {0, 2}};
  for (int i = 0; i < 4; ++i) {
    CHECK(g.neighbors(i, 0) == expected[i][0]);
    CHECK(g.neighbors(i, 1) == expected[i][1]);
  }
  CHECK_THROWS_AS(build_knn(x, 4), UsageError);
}

TEST_CASE("build_knn matches a brute-force sort") {
  std::mt19937_64 rng(500);
  const MatrixXd x = tt::random_matrix(500, 8, rng);
  const NeighborGraph g = build_knn(from(x), 15);
  for (Index i = 0; i < 500; ++i) {
    std::vector<std::pair<double, Index>> all;
    for (Index j = 0; j < 500; ++j)
      if (j != i) all.emplace_back(tt::dist(x, i, j), j);
    std::sort(all.begin(), all.end());
    for (int r = 0; r < 15; ++r) {
      CHECK(g.neighbors(i, r) == all[static_cast<std::size_t>(r)].second);
      CHECK(std::abs(g.distances(i, r) - std::sqrt(all[static_cast<std::size_t>(r)].first)) < 1e-12);
    }
  }
}

TEST_CASE("graph is invariant to rigid motion") {
  std::mt19937_64 rng(2);
  const MatrixXd x = tt::random_matrix(200, 3, rng);
  const Matrix3d r = tt::random_rotation(rng);
  MatrixXd y = x * r.transpose();
  y.rowwise() += Eigen::RowVector3d(4, -2, 7);
  CHECK(build_knn(x, 10).neighbors == build_knn(y, 10).neighbors);
}

TEST_CASE("compute_weights examples") {
  NeighborGraph g;
  g.neighbors.resize(1, 2);
  g.neighbors << 1, 2;
  g.distances.resize(1, 2);
  g.distances << 1, 2;
  const auto w = compute_weights(g, KernelSigma::fixed(1.0)).weights;
  const double a = std::exp(-0.5), b = std::exp(-2.0);
  CHECK(std::abs(w(0, 0) - a / (a + b)) < 1e-15);
  CHECK(std::abs(w(0, 0) - 0.8176) < 1e-4);
  CHECK(std::abs(w(0, 1) - 0.1824) < 1e-4);

  g.distances << 3, 3;
  const auto eq = compute_weights(g, KernelSigma{}).weights;
  CHECK(eq(0, 0) == doctest::Approx(0.5));
  CHECK(eq(0, 1) == doctest::Approx(0.5));

  CHECK_THROWS_AS(compute_weights(g, KernelSigma::fixed(0.0)), UsageError);
  CHECK_THROWS_AS(compute_weights(g, KernelSigma::fixed(-1.0)), UsageError);
}

TEST_CASE("duplicate points fall back to uniform weights with a warning") {
  MatrixXd x = MatrixXd::Zero(6, 2);
  x.row(5) << 5, 5;
  std::vector<std::string> warnings;
  const auto g = compute_weights(build_knn(x, 3), KernelSigma{}, &warnings);
  CHECK_FALSE(warnings.empty());
  for (int r = 0; r < 3; ++r) CHECK(g.weights(0, r) == doctest::Approx(1.0 / 3.0));
  CHECK(g.weights.allFinite());
}

TEST_CASE("weight rows are normalized distributions") {
  std::mt19937_64 rng(8);
  const MatrixXd x = tt::random_matrix(300, 6, rng);
  for (const KernelSigma mode : {KernelSigma{}, KernelSigma::fixed(0.05), KernelSigma::fixed(10.0)}) {
    const auto g = compute_weights(build_knn(x, 12), mode);
    for (Index i = 0; i < g.size(); ++i) {
      CHECK(std::abs(g.weights.row(i).sum() - 1.0) < 1e-8);
      CHECK(g.weights.row(i).minCoeff() >= 0.0);
      CHECK(g.weights.row(i).maxCoeff() <= 1.0);
      for (int r = 0; r < g.k(); ++r) CHECK(g.neighbors(i, r) != i);
      for (int r = 1; r < g.k(); ++r) CHECK(g.distances(i, r - 1) <= g.distances(i, r));
    }
  }
}

TEST_CASE("high_dim_edges") {
  MatrixXd x(3, 2);
  x << 1, 2, 4, 6, 0, 0;
  const Dataset d = from(x);
  const NeighborGraph g = build_knn(d, 2);
  const MatrixXd e = high_dim_edges(d, g, 0);
  // point 0: nearest is 2 (dist sqrt 5), then 1 (dist 5)
  MatrixXd expected(2, 2);
  expected << -1, -2, 3, 4;
  CHECK((e - expected).norm() == 0.0);

  const MatrixXd at_origin = high_dim_edges(d, g, 2);
  CHECK(at_origin.row(0) == x.row(g.neighbors(2, 0)));

  Dataset shifted = d;
  shifted.points.rowwise() += Eigen::RowVector2d(100, -3);
  CHECK((high_dim_edges(shifted, g, 1) - high_dim_edges(d, g, 1)).norm() < 1e-12);
  CHECK_THROWS_AS(high_dim_edges(d, g, 3), PreconditionError);
}

TEST_CASE("graph sidecar round-trip") {
  std::mt19937_64 rng(9);
  const auto g = compute_weights(build_knn(tt::random_matrix(60, 4, rng), 7), KernelSigma{});
  const auto dir = tt::temp_dir("graph_io");
  save_graph(g, dir / "g.tgsg");
  const std::string bytes = tt::read_bytes(dir / "g.tgsg");
  CHECK(bytes.substr(0, 4) == "TGSG");
  CHECK(bytes.size() == 4 + 8 + 60 * 7 * (4 + 8 + 8));

  const auto h = load_graph(dir / "g.tgsg");
  CHECK(h.neighbors == g.neighbors);
  CHECK(h.distances == g.distances);
  CHECK(h.weights == g.weights);

  tt::write_text(dir / "bad.tgsg", "NOPE");
  CHECK_THROWS_AS(load_graph(dir / "bad.tgsg"), DataError);
  tt::write_text(dir / "short.tgsg", bytes.substr(0, 100));
  CHECK_THROWS_AS(load_graph(dir / "short.tgsg"), DataError);
}
