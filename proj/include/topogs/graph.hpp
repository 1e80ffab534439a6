#pragma once

#include "topogs/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace topogs {

struct NeighborGraph {
  RowMatrixXi neighbors;  // N x k, row i lists the k nearest j != i
  RowMatrixXd distances;  // N x k, ascending per row
  RowMatrixXd weights;    // N x k, rows sum to 1 once compute_weights ran

  Index size() const { return neighbors.rows(); }
  Index k() const { return neighbors.cols(); }
  bool has_weights() const { return weights.rows() == neighbors.rows() && weights.cols() == neighbors.cols(); }
};

// Exact Euclidean k-NN by all-pairs scan; ties go to the smaller index.
NeighborGraph build_knn(const Dataset& d, int k);

// Same, on a bare point matrix (rows are points).
NeighborGraph build_knn(const MatrixXd& points, int k);

// Gaussian-kernel affinities normalized per row. Adaptive mode uses the mean
// neighbour distance of each row as its bandwidth. Rows whose distances are
// all zero fall back to uniform weights and append a message to `warnings`.
NeighborGraph compute_weights(NeighborGraph g, const KernelSigma& mode, std::vector<std::string>* warnings = nullptr);

// k x n matrix whose row r is x_{neighbors(i, r)} - x_i.
MatrixXd high_dim_edges(const Dataset& d, const NeighborGraph& g, Index i);

// Binary sidecar: "TGSG", u32 N, u32 k, N*k u32 indices, N*k f64 distances,
// N*k f64 weights; all little-endian, rows in order.
void save_graph(const NeighborGraph& g, const std::filesystem::path& path);
NeighborGraph load_graph(const std::filesystem::path& path);

}  // namespace topogs
